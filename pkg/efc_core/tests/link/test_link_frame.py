import numpy as np
import pytest

from efc_core.app.link.frame import (
    FRAME_LEN,
    SYNC,
    FrameDecoder,
    crc16_ccitt_false,
    decode_frame,
    encode_frame,
)
from efc_core.app.models.errors import FramingError, InputDomainError, IntegrityError


def bitwise_crc(data: bytes) -> int:
    """CRC-16/CCITT-FALSE побитово: poly 0x1021, init 0xFFFF."""
    crc = 0xFFFF
    for byte in data:
        crc ^= byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) if crc & 0x8000 else (crc << 1)
            crc &= 0xFFFF
    return crc


@pytest.fixture()
def payload() -> list[int]:
    return [(-1) ** i * (i * 2047) for i in range(16)]


def test_crc_check_value() -> None:
    assert crc16_ccitt_false(b"123456789") == 0x29B1
    assert bitwise_crc(b"123456789") == 0x29B1


def test_frame_layout(payload: list[int]) -> None:
    frame = encode_frame(payload, 0x42)
    assert len(frame) == FRAME_LEN == 36
    assert frame[0] == SYNC == 0xA5
    assert frame[1] == 0x42
    # слово 1 = -2047 little-endian
    assert frame[4:6] == (-2047).to_bytes(2, "little", signed=True)
    assert int.from_bytes(frame[34:36], "big") == bitwise_crc(frame[1:34])


def test_zero_frame_crc() -> None:
    frame = encode_frame([0] * 16, 0)
    assert frame[1:34] == bytes(33)
    assert int.from_bytes(frame[34:], "big") == bitwise_crc(bytes(33))


def test_one_bit_payload_change_changes_crc() -> None:
    a = encode_frame([0] * 16, 0)
    b = encode_frame([1] + [0] * 15, 0)
    assert a[34:] != b[34:]


def test_round_trip_random_payloads() -> None:
    rng = np.random.default_rng(50)
    for i, words in enumerate(rng.integers(-32768, 32768, size=(10_000, 16))):
        seq = i % 256
        frame = decode_frame(encode_frame(words, seq))
        assert frame.seq == seq
        assert frame.payload == tuple(int(w) for w in words)


def test_every_single_bit_flip_rejected(payload: list[int]) -> None:
    frame = encode_frame(payload, 200)
    positions = range(8, 34 * 8)
    assert len(positions) == 264
    for bit in positions:
        corrupted = bytearray(frame)
        corrupted[bit // 8] ^= 1 << (bit % 8)
        with pytest.raises(IntegrityError):
            decode_frame(bytes(corrupted))


def test_crc_field_corruption_rejected(payload: list[int]) -> None:
    corrupted = bytearray(encode_frame(payload, 1))
    corrupted[-1] ^= 0x01
    with pytest.raises(IntegrityError, match="CRC"):
        decode_frame(bytes(corrupted))


@pytest.mark.parametrize("sync", [0x00, 0xA4, 0x5A, 0xFF])
def test_bad_sync_is_framing_error(payload: list[int], sync: int) -> None:
    corrupted = bytearray(encode_frame(payload, 3))
    corrupted[0] = sync
    with pytest.raises(FramingError):
        decode_frame(bytes(corrupted))


@pytest.mark.parametrize("length", [0, 35, 37])
def test_wrong_length_is_framing_error(length: int) -> None:
    with pytest.raises(FramingError):
        decode_frame(bytes([SYNC]) * length)


@pytest.mark.parametrize(
    ("words", "seq"),
    [
        ([0] * 16, 256),
        ([0] * 16, -1),
        ([32768] + [0] * 15, 0),
        ([0] * 15, 0),
    ],
)
def test_encode_rejects_out_of_range(words: list[int], seq: int) -> None:
    with pytest.raises(InputDomainError):
        encode_frame(words, seq)


def test_decoder_counts_sequence_gaps(payload: list[int]) -> None:
    decoder = FrameDecoder()
    for seq in (0, 1, 3, 4, 7):
        assert decoder.feed(encode_frame(payload, seq)) is not None
    assert decoder.lost == 3
    assert decoder.received == 5


def test_decoder_wraps_modulo_256(payload: list[int]) -> None:
    decoder = FrameDecoder()
    for seq in (254, 255, 0, 2):
        decoder.feed(encode_frame(payload, seq))
    assert decoder.lost == 1


def test_decoder_counts_rejected_frames(payload: list[int]) -> None:
    decoder = FrameDecoder()
    good = encode_frame(payload, 0)
    bad_crc = bytearray(encode_frame(payload, 1))
    bad_crc[10] ^= 0x80
    bad_sync = b"\x00" + encode_frame(payload, 2)[1:]

    assert decoder.feed(good) is not None
    assert decoder.feed(bytes(bad_crc)) is None
    assert decoder.feed(bad_sync) is None
    assert decoder.feed(encode_frame(payload, 3)) is not None
    assert (decoder.integrity_errors, decoder.framing_errors, decoder.lost) == (1, 1, 2)


def test_missing_frame_counted_once(payload: list[int]) -> None:
    decoder = FrameDecoder()
    decoder.feed(encode_frame(payload, 0))
    decoder.mark_missing()
    assert decoder.lost == 1
    # следующий кадр по порядку не даёт второго учёта той же потери
    decoder.feed(encode_frame(payload, 2))
    assert decoder.lost == 1
    decoder.feed(encode_frame(payload, 4))
    assert decoder.lost == 2


def test_missing_first_frame(payload: list[int]) -> None:
    decoder = FrameDecoder()
    decoder.mark_missing()
    decoder.feed(encode_frame(payload, 1))
    decoder.feed(encode_frame(payload, 2))
    assert (decoder.lost, decoder.received) == (1, 2)
