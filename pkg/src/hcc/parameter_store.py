import hashlib
from typing import Callable, Dict, Iterable, List

import numpy as np

from hcc.tensor import Parameter


class ParameterStore:
    """
    Registry of named model parameters. Every name appears exactly once.
    """
    def __init__(self, on_change: Callable[[], None] | None = None):
        self._items: Dict[str, Parameter] = {}
        self.on_change = on_change

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, name: str) -> bool:
        return name in self._items

    def list(self) -> List[Parameter]:
        return list(self._items.values())

    def names(self) -> List[str]:
        return list(self._items.keys())

    def get(self, name: str) -> Parameter | None:
        return self._items.get(name)

    def create(self, name: str, value: np.ndarray) -> Parameter:
        param = Parameter(name, value)
        self.add([param])
        return param

    def add(self, items: List[Parameter], notify: bool = True) -> None:
        if not items:
            return

        names_to_add = set()
        for item in items:
            if item.name in self._items:
                raise ValueError(f"duplicate parameter name '{item.name}': already registered")
            if item.name in names_to_add:
                raise ValueError(f"duplicate parameter name '{item.name}' in one registration")
            names_to_add.add(item.name)

        for item in items:
            self._items[item.name] = item

        if notify and self.on_change is not None:
            self.on_change()

    def assign(self, values: Dict[str, np.ndarray]) -> None:
        """Overwrite values of existing parameters; shapes must match."""
        for name, value in values.items():
            param = self._items.get(name)
            if param is None:
                raise ValueError(f"unknown parameter '{name}'")
            if tuple(value.shape) != param.shape:
                raise ValueError(
                    f"parameter '{name}' has shape {param.shape}, got {tuple(value.shape)}"
                )

        for name, value in values.items():
            self._items[name].value[...] = value

    def with_prefix(self, *prefixes: str) -> List[Parameter]:
        return [p for name, p in self._items.items() if name.startswith(prefixes)]

    def zero_grad(self) -> None:
        for param in self._items.values():
            param.zero_grad()

    @property
    def nbytes(self) -> int:
        return sum(p.nbytes for p in self._items.values())

    def digest(self, names: Iterable[str] | None = None) -> str:
        selected = sorted(self._items) if names is None else sorted(names)
        h = hashlib.sha256()
        for name in selected:
            h.update(name.encode("utf-8"))
            h.update(self._items[name].value.tobytes())
        return h.hexdigest()
