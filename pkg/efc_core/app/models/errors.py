from __future__ import annotations

from typing import Optional


class FeedbackError(Exception):
    """Базовая ошибка контура обратной связи."""


class InputDomainError(FeedbackError, ValueError):
    """Вход вне области определения операции (NaN, не та длина, код вне диапазона)."""


class ConfigurationError(FeedbackError, ValueError):
    """Невалидная конфигурация. key: ключ в точечной нотации (pid.kp), если известен."""

    def __init__(self, message: str, *, key: Optional[str] = None) -> None:
        super().__init__(message)
        self.key = key


class FramingError(FeedbackError):
    """Неверный sync-байт или длина кадра."""


class IntegrityError(FeedbackError):
    """CRC кадра не сошёлся."""


class InternalError(FeedbackError, RuntimeError):
    """Состояние, которое не должно возникать при валидной конфигурации."""
