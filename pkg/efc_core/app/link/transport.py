"""Модель задержки и потерь линии RS-485."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from efc_core.app.link.frame import FRAME_BITS
from efc_core.app.models.dto import LinkModel
from efc_core.app.models.errors import InputDomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Delivery:
    frame: bytes
    arrival_time: float
    dropped: bool = False


def serialization_delay(model: LinkModel, n_bits: int = FRAME_BITS) -> float:
    return n_bits / model.bitrate


def transmit(frame: bytes, model: LinkModel, now: float, rng: np.random.Generator) -> Delivery:
    if not math.isfinite(now):
        raise InputDomainError(f"transmit time must be finite, got {now!r}")
    arrival = now + model.fixed_latency + serialization_delay(model, len(frame) * 8)
    # ровно один жребий на кадр, даже при drop_prob = 0
    dropped = bool(rng.random() < model.drop_prob)
    return Delivery(frame=frame, arrival_time=arrival, dropped=dropped)


class LinkChannel:
    """Линия с собственным генератором потерь; один владелец на запуск."""

    __slots__ = ("model", "_rng", "sent", "dropped")

    def __init__(self, model: LinkModel, seed: int | np.random.Generator = 0) -> None:
        self.model = model
        if model.drop_seed is not None:
            seed = model.drop_seed
        self._rng = np.random.default_rng(seed)
        self.sent = 0
        self.dropped = 0

    def transmit(self, frame: bytes, now: float) -> Delivery:
        delivery = transmit(frame, self.model, now, self._rng)
        self.sent += 1
        if delivery.dropped:
            self.dropped += 1
            logger.debug("[LINK] Frame %d dropped", self.sent)
        return delivery
