"""Frequency band definitions used throughout the feature pipeline."""

from dataclasses import dataclass


@dataclass(frozen=True)
class BandDefinition:
    """A named frequency band [lo, hi] in Hz. lo == 0 means pure low-pass."""

    name: str
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo < 0:
            raise ValueError(f"band {self.name}: lo must be >= 0, got {self.lo}")
        if self.hi <= self.lo:
            raise ValueError(f"band {self.name}: need lo < hi, got [{self.lo}, {self.hi}]")

    def validate_for_rate(self, fs):
        """Raise if the band cannot be realized at sampling rate fs."""
        if self.hi >= fs / 2:
            raise ValueError(
                f"band {self.name}: hi={self.hi} Hz is not below Nyquist ({fs / 2} Hz)"
            )


# Canonical 10-band set, in the fixed order used for stacking feature planes.
DEFAULT_BANDS = (
    BandDefinition("delta", 0.0, 3.0),
    BandDefinition("theta", 4.0, 7.0),
    BandDefinition("low_alpha", 8.0, 9.5),
    BandDefinition("high_alpha", 10.5, 12.0),
    BandDefinition("alpha", 8.0, 12.0),
    BandDefinition("low_beta", 13.0, 16.0),
    BandDefinition("mid_beta", 17.0, 20.0),
    BandDefinition("high_beta", 21.0, 29.0),
    BandDefinition("beta", 13.0, 29.0),
    BandDefinition("gamma", 30.0, 50.0),
)

BAND_NAMES = tuple(b.name for b in DEFAULT_BANDS)
BAND_INDEX = {b.name: i for i, b in enumerate(DEFAULT_BANDS)}


def band_by_name(name):
    """Look up one of the canonical bands by name."""
    try:
        return DEFAULT_BANDS[BAND_INDEX[name]]
    except KeyError:
        raise ValueError(f"unknown band {name!r}; known: {', '.join(BAND_NAMES)}") from None
