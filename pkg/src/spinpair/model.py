"""Parameter container for a coupled ion-pair site."""

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .tensors import as_matrix3, antisymmetric_matrix, antisymmetric_vector


class ElectronicState(str, Enum):
    """Electronic configuration of the pair: first digit ion 1, second ion 2."""

    G00 = "00"
    E10 = "10"
    E01 = "01"
    E11 = "11"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        v = str(value).upper().lstrip("GE")
        for s in cls:
            if s.value == v or s.name == str(value).upper():
                return s
        raise ValueError(f"unknown electronic state {value!r}")


class Parity(str, Enum):
    """Behaviour of the optical coupling under time reversal."""

    EVEN = "even"
    ODD = "odd"


G00, E10, E01, E11 = ElectronicState.G00, ElectronicState.E10, ElectronicState.E01, ElectronicState.E11
SPECTRAL_STATES = (G00, E10, E01)


def _freeze(a):
    a = as_matrix3(a).copy()
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StateTensors:
    """g-tensors of both ions (GHz/T) and the coupling tensor (GHz) in one electronic state."""

    g1: np.ndarray
    g2: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "g1", _freeze(self.g1))
        object.__setattr__(self, "g2", _freeze(self.g2))
        object.__setattr__(self, "J", _freeze(self.J))

    def is_ising(self, atol=1e-12):
        """True when only zz elements are nonzero in g1, g2 and J."""
        mask = np.ones((3, 3), dtype=bool)
        mask[2, 2] = False
        return all(np.all(np.abs(m[mask]) <= atol) for m in (self.g1, self.g2, self.J))


@dataclass(frozen=True)
class PairSiteModel:
    """Complete parameter set for one pair site.

    ``states`` maps each electronic state to its :class:`StateTensors`. Optical
    origins are in GHz relative to an arbitrary reference: the |10> manifold
    sits at ``nu10`` and the |01> manifold at ``nu10 + detuning``.
    ``kappa`` is the optical coupling between |10> and |01> states of equal
    spin projection; the anticrossing it opens has a gap of ``2 * kappa``.
    """

    states: dict
    nu10: float = 0.0
    detuning: float = 0.0
    kappa: float = 0.0
    parity: Parity = Parity.EVEN
    ion1_active: bool = True
    ion2_active: bool = True
    name: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        states = {}
        for k, v in dict(self.states).items():
            st = ElectronicState.parse(k)
            if not isinstance(v, StateTensors):
                v = StateTensors(**v)
            states[st] = v
        if G00 not in states:
            raise ValueError("model needs ground-state (00) tensors")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "parity", Parity(self.parity))
        for name in ("nu10", "detuning", "kappa"):
            val = float(getattr(self, name))
            if not np.isfinite(val):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, val)

    @property
    def nu01(self):
        return self.nu10 + self.detuning

    def origin(self, state):
        state = ElectronicState.parse(state)
        if state is E10:
            return self.nu10
        if state is E01:
            return self.nu01
        if state is G00:
            return 0.0
        return self.nu10 + self.nu01

    def excited_states(self):
        return [s for s in (E10, E01) if s in self.states]

    def tensors(self, state):
        state = ElectronicState.parse(state)
        try:
            return self.states[state]
        except KeyError:
            raise KeyError(f"model {self.name!r} has no tensors for state {state.value}") from None

    def amplitudes(self):
        return (1.0 if self.ion1_active else 0.0, 1.0 if self.ion2_active else 0.0)

    # -- functional updates -------------------------------------------------

    def replace(self, **changes):
        return replace(self, **changes)

    def with_state(self, state, **tensors):
        state = ElectronicState.parse(state)
        cur = self.states.get(state)
        kw = {"g1": cur.g1, "g2": cur.g2, "J": cur.J} if cur is not None else {}
        kw.update(tensors)
        states = dict(self.states)
        states[state] = StateTensors(**kw)
        return replace(self, states=states)

    def with_dvector(self, state, D):
        """Replace the antisymmetric part of J in ``state`` by the one for vector D."""
        J = np.array(self.tensors(state).J)
        sym = 0.5 * (J + J.T)
        return self.with_state(state, J=sym + antisymmetric_matrix(D))

    def dvector(self, state):
        return antisymmetric_vector(self.tensors(state).J)

    # -- serialization ------------------------------------------------------

    def to_dict(self):
        return {
            "name": self.name,
            "states": {
                s.value: {"g1": t.g1.tolist(), "g2": t.g2.tolist(), "J": t.J.tolist()}
                for s, t in self.states.items()
            },
            "nu10_GHz": self.nu10,
            "detuning_GHz": self.detuning,
            "kappa_GHz": self.kappa,
            "parity": self.parity.value,
            "ion1_active": self.ion1_active,
            "ion2_active": self.ion2_active,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, d):
        try:
            states = {k: StateTensors(**v) for k, v in d["states"].items()}
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed model document: {exc}") from exc
        return cls(
            states=states,
            nu10=d.get("nu10_GHz", 0.0),
            detuning=d.get("detuning_GHz", 0.0),
            kappa=d.get("kappa_GHz", 0.0),
            parity=d.get("parity", "even"),
            ion1_active=bool(d.get("ion1_active", True)),
            ion2_active=bool(d.get("ion2_active", True)),
            name=d.get("name", ""),
            metadata=dict(d.get("metadata", {})),
        )

    def fingerprint(self):
        """Short content hash used for provenance records."""
        import hashlib
        import json

        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
