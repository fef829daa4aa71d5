"""mbpostproc: load solver result archives, compute spectra, emit figures."""

from .archive import ArchiveError, FieldTrace, load_archive
from .figures import (
    FIGURE_KINDS,
    make_figure,
    populations_figure,
    sit_figure,
    spectrum_figure,
)
from .spectra import Trace, periodogram, power_spectrum

__version__ = "0.1.0"
