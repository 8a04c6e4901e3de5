"""
Кадр RS-485 между платой сбора и платой управления катушками.

    байт 0       0xA5 (синхро)
    байт 1       seq, счётчик по модулю 256
    байты 2..33  16 знаковых 16-битных слов, little-endian
    байты 34..35 CRC-16/CCITT-FALSE по байтам 1..33, big-endian
"""
from __future__ import annotations

import binascii
import logging
import struct
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from efc_core.app.models.errors import FramingError, InputDomainError, IntegrityError
from efc_core.app.models.vectors import N_CHANNELS

logger = logging.getLogger(__name__)

SYNC = 0xA5
FRAME_LEN = 36
FRAME_BITS = FRAME_LEN * 8

_BODY = struct.Struct(f"<B{N_CHANNELS}h")
_CRC = struct.Struct(">H")


def crc16_ccitt_false(data: bytes) -> int:
    """poly 0x1021, init 0xFFFF, без отражений и без финального xor."""
    return binascii.crc_hqx(data, 0xFFFF)


@dataclass(frozen=True)
class Frame:
    seq: int
    payload: Tuple[int, ...]

    def words(self) -> np.ndarray:
        return np.array(self.payload, dtype=np.int64)


def encode_frame(payload: Sequence[int], seq: int) -> bytes:
    words = [int(w) for w in payload]
    if len(words) != N_CHANNELS:
        raise InputDomainError(f"frame payload needs {N_CHANNELS} words, got {len(words)}")
    if not 0 <= seq <= 0xFF:
        raise InputDomainError(f"seq must fit in one byte, got {seq}")
    try:
        body = _BODY.pack(seq, *words)
    except struct.error as exc:
        raise InputDomainError(f"payload word outside the signed 16-bit range: {exc}") from exc
    return bytes([SYNC]) + body + _CRC.pack(crc16_ccitt_false(body))


def decode_frame(data: bytes) -> Frame:
    if len(data) != FRAME_LEN or data[0] != SYNC:
        raise FramingError(f"bad frame: length={len(data)} sync=0x{data[0]:02X}" if data else "empty frame")
    body = data[1:-2]
    (crc,) = _CRC.unpack(data[-2:])
    if crc != crc16_ccitt_false(body):
        raise IntegrityError(f"CRC mismatch: got 0x{crc:04X}, expected 0x{crc16_ccitt_false(body):04X}")
    seq, *payload = _BODY.unpack(body)
    return Frame(seq=seq, payload=tuple(payload))


@dataclass
class FrameDecoder:
    """
    Приёмная сторона с учётом потерь.

    Пропуск в seq или неприход кадра к сроку (mark_missing) считается
    потерей; битые кадры отбрасываются и учитываются отдельно.
    """

    received: int = 0
    lost: int = 0
    framing_errors: int = 0
    integrity_errors: int = 0
    _expected: int | None = field(default=None, repr=False)

    def feed(self, data: bytes) -> Frame | None:
        try:
            frame = decode_frame(data)
        except FramingError:
            self.framing_errors += 1
            logger.warning("[LINK] Framing error, frame discarded")
            return None
        except IntegrityError:
            self.integrity_errors += 1
            logger.warning("[LINK] CRC mismatch, frame discarded")
            return None

        if self._expected is not None:
            gap = (frame.seq - self._expected) & 0xFF
            if gap:
                self.lost += gap
                logger.debug("[LINK] Sequence gap of %d before seq=%d", gap, frame.seq)
        self._expected = (frame.seq + 1) & 0xFF
        self.received += 1
        return frame

    def mark_missing(self) -> None:
        """Кадр не пришёл к сроку: считаем потерю и сдвигаем ожидаемый seq."""
        self.lost += 1
        if self._expected is not None:
            self._expected = (self._expected + 1) & 0xFF
        logger.debug("[LINK] Frame missing, %d lost so far", self.lost)
