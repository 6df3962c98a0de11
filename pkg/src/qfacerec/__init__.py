"""qfacerec - quantum face recognition protocol on a statevector simulator."""

__version__ = "1.0.0"
