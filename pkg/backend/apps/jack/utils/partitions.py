"""Young diagrams with arm and leg lengths."""

from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple


class PartitionError(Exception):
    """Raised when parts are not a weakly decreasing sequence of nonnegative integers."""
    pass


@dataclass(frozen=True)
class Partition:
    parts: Tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if any(p < 0 for p in parts) or any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise PartitionError(f"{parts} is not a partition")
        # trailing zeros carry no boxes
        while parts and parts[-1] == 0:
            parts = parts[:-1]
        object.__setattr__(self, "parts", parts)

    @classmethod
    def of(cls, parts: Sequence[int]) -> "Partition":
        return cls(tuple(parts))

    def __len__(self):
        return len(self.parts)

    @property
    def size(self) -> int:
        return sum(self.parts)

    def padded(self, n: int) -> Tuple[int, ...]:
        if len(self.parts) > n:
            raise PartitionError(f"{self.parts} has more than {n} parts")
        return self.parts + (0,) * (n - len(self.parts))

    def conjugate(self) -> "Partition":
        if not self.parts:
            return self
        return Partition(tuple(sum(1 for p in self.parts if p >= c) for c in range(1, self.parts[0] + 1)))

    def boxes(self) -> Iterator[Tuple[int, int]]:
        """1-based (row, column) pairs."""
        for i, part in enumerate(self.parts, start=1):
            for j in range(1, part + 1):
                yield i, j

    def arm(self, i: int, j: int) -> int:
        return self.parts[i - 1] - j

    def leg(self, i: int, j: int) -> int:
        conjugate = self.conjugate().parts
        return conjugate[j - 1] - i
