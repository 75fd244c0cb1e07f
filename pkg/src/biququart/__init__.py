"""Polarization ququarts carried by frequency non-degenerate biphotons.

Submodules:
    linalg       fixed-size 2x2 / 4x4 complex helpers
    states       ququart states, protocol bases, density matrices
    polarimetry  two-mode Stokes parameters and polarization degree
    optics       dichroic and achromatic retardation plates, quartz dispersion, tilt
    detection    coincidence station, four-detector receiver, tomography
    qkd          simulated prepare-and-measure session over bases I-III
    cli          command line front end (``python -m biququart``)
"""

__version__ = "0.1.0"
