"""Shared fixtures-in-spirit for the service-layer test modules."""

import itertools

from ideaforge.backends import BackendError
from ideaforge.decoder import GenerationResult

# two fake completions, each comfortably over the 30-token floor
TEXT_A = (
    "A telescoping wiper arm rides a rail along each floor and squeegees the "
    "glass in slow vertical passes, recycling its own grey water through a "
    "small filter cartridge stored in the sill."
)
TEXT_B = (
    "Small magnetic crawler robots pair up across the pane, one inside and "
    "one outside, and wipe in synchronized spirals while sensors watch for "
    "gaps in coverage and schedule a second pass."
)


class FakeBackend:
    """Scripted completion source; one list of texts per call, in order."""

    def __init__(self, batches):
        self.batches = list(batches)
        self.requests = []

    def complete(self, request):
        self.requests.append(request)
        if not self.batches:
            raise BackendError("script exhausted")
        entry = self.batches.pop(0)
        if isinstance(entry, Exception):
            raise entry
        texts = entry[: request.params.n_candidates]
        return [
            GenerationResult(text=t, token_ids=(), finish_reason="stop", params=request.params)
            for t in texts
        ]


def ticking_clock(start=1_000_000.0):
    counter = itertools.count()
    return lambda: start + float(next(counter))
