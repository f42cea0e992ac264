"""Room occupancy estimation from Wi-Fi probe-request traffic."""

__version__ = "0.1.0"
