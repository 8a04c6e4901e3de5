"""
Программная модель системы активной коррекции поля ошибки.

Две платы (плата сбора и плата управления катушками), связанные
последовательным каналом, и упрощённая модель вихревых токов в медном кожухе.
"""
