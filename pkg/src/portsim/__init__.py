"""Seed-reproducible discrete-event simulator of an intermodal
inbound-freight network: port arrivals, train and truck dispatch,
warehouse storage, and destination delivery, with experiment drivers
for single runs, multi-seed sweeps, and facility-upgrade optimization.
"""

__version__ = "0.1.0"
