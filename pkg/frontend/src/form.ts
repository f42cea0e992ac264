// Ground-truth entry validation. Mirrors the backend's rules (count >= 0
// integer, ttl_s > 0) so invalid submissions are blocked client-side.

export const DEFAULT_TTL_S = 600;

export interface FormCheck {
  valid: boolean;
  countError: string | null;
  ttlError: string | null;
  body: { count: number; ttl_s: number } | null;
}

export function checkGroundTruthForm(countRaw: string, ttlRaw: string): FormCheck {
  let countError: string | null = null;
  let ttlError: string | null = null;

  const count = Number(countRaw.trim());
  if (countRaw.trim() === "" || !Number.isInteger(count) || count < 0) {
    countError = "count must be a non-negative integer";
  }

  const ttlText = ttlRaw.trim() === "" ? String(DEFAULT_TTL_S) : ttlRaw.trim();
  const ttl = Number(ttlText);
  if (!Number.isInteger(ttl) || ttl <= 0) {
    ttlError = "ttl must be a positive integer (seconds)";
  }

  const valid = countError === null && ttlError === null;
  return {
    valid,
    countError,
    ttlError,
    body: valid ? { count, ttl_s: ttl } : null,
  };
}

export function expiryText(issuedAt: number, ttlS: number): string {
  const expiry = new Date((issuedAt + ttlS) * 1000);
  return `ground truth accepted, valid until ${expiry.toISOString()}`;
}
