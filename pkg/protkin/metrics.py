from functools import wraps
from typing import Any, Callable, TypeVar

from prometheus_client import Histogram

F = TypeVar("F", bound=Callable[..., Any])


def timed(histogram: Histogram, **label_values: str) -> Callable[[F], F]:
    """
    Observe the wall time of every call of the decorated function in the
    histogram under fixed label values.
    """

    def decorator(func: F) -> F:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            with histogram.labels(**label_values).time():
                return func(*args, **kwargs)

        return wrapper  # type: ignore

    return decorator
