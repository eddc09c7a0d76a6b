"""Chain orchestration: initialization, prior and back-off configuration,
sampling in divisions with optional checkpointing, burn-in, and counters.

The checkpoint file is a single JSON document with a fixed field order,
17-significant-digit numbers, and a CRC-32 checksum over the canonical
serialization, so a resumed run continues bit-identically.
"""

from __future__ import annotations

import json
import os
import zlib
from typing import Dict, List, Optional, Union

import numpy as np

from . import kernel
from .errors import (
    BurnTooLarge,
    CheckpointWriteFailure,
    CorruptCheckpoint,
    DimensionMismatch,
    InitialGuessOutsideDomain,
    IOFailure,
    SingularProposal,
)
from .kernel import BackoffPolicy
from .model import ModelHandle
from .posterior import GaussianPrior, log_posterior, point_state_from_eval

_CHECKPOINT_VERSION = 1


def _fmt_number(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        raise TypeError("no boolean fields in checkpoints")
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _serialize(v) -> str:
    """Canonical JSON text: insertion-ordered keys, compact separators,
    numbers at 17 significant digits."""
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        items = ",".join(f"{json.dumps(k)}:{_serialize(val)}" for k, val in v.items())
        return "{" + items + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_serialize(item) for item in v) + "]"
    return _fmt_number(v)


def _assemble_document(dim: int, chain_rows: List[np.ndarray], n_samples: int,
                       n_accepted: int, call_count: int, burned: int,
                       step_count: Dict[int, int], policy: BackoffPolicy,
                       prior: GaussianPrior, current_x: np.ndarray,
                       rng_algorithm: str, rng_state: List[str]) -> dict:
    stage_order = [-1] + sorted(k for k in step_count if k != -1)
    return {
        "format_version": _CHECKPOINT_VERSION,
        "dim": int(dim),
        "chain": [[float(v) for v in row] for row in chain_rows],
        "counters": {
            "n_samples": int(n_samples),
            "n_accepted": int(n_accepted),
            "call_count": int(call_count),
            "burned": int(burned),
        },
        "step_count": {str(k): int(step_count[k]) for k in stage_order},
        "policy": {
            "mode": policy.mode,
            "max_steps": int(policy.max_steps),
            "factor": float(policy.factor),
            "t_lo": float(policy.t_lo),
            "t_hi": float(policy.t_hi),
        },
        "prior": {
            "mean": [float(v) for v in prior.mean],
            "precision": [float(v) for v in prior.precision.ravel()],
        },
        "current_x": [float(v) for v in current_x],
        "rng": {"algorithm_id": rng_algorithm, "state": list(rng_state)},
    }


def _canonical_checksum(doc: dict) -> str:
    body = _serialize(doc)
    return format(zlib.crc32(body.encode("utf-8")) & 0xFFFFFFFF, "08x")


def _checkpoint_text(doc: dict) -> str:
    body = _serialize(doc)
    checksum = format(zlib.crc32(body.encode("utf-8")) & 0xFFFFFFFF, "08x")
    return body[:-1] + ',"checksum":' + json.dumps(checksum) + "}\n"


def _rng_state_strings(rng: np.random.Generator) -> tuple:
    state = rng.bit_generator.state
    inner = state["state"]
    mask = (1 << 64) - 1
    words = [
        inner["state"] >> 64, inner["state"] & mask,
        inner["inc"] >> 64, inner["inc"] & mask,
        state["has_uint32"], state["uinteger"],
    ]
    return state["bit_generator"], [str(int(w)) for w in words]


def _rng_from_strings(algorithm: str, words: List[str]) -> np.random.Generator:
    if algorithm != "PCG64":
        raise CorruptCheckpoint(f"unsupported generator {algorithm!r}")
    w = [int(s) for s in words]
    bit_gen = np.random.PCG64()
    bit_gen.state = {
        "bit_generator": "PCG64",
        "state": {"state": (w[0] << 64) | w[1], "inc": (w[2] << 64) | w[3]},
        "has_uint32": w[4],
        "uinteger": w[5],
    }
    return np.random.Generator(bit_gen)


class Sampler:
    """Markov chain sampler for targets indicator * prior * exp(-||f||^2/2).

    Parameters
    ----------
    x0 : array_like
        Initial guess; the model is evaluated here immediately.
    model : ModelHandle
        The wrapped user model.
    seed : int, optional
        Seed for the internal generator. Chains are bit-reproducible given
        a seed, regardless of division layout or checkpoint interruptions.
    prior : GaussianPrior, optional
        Defaults to flat (zero precision about ``x0``). A model with fewer
        residuals than parameters needs an informative prior here, since
        the flat-prior proposal precision J'J is rank deficient.

    The back-off policy defaults to none; see :meth:`set_prior`,
    :meth:`set_static`, :meth:`set_dynamic`.

    Raises
    ------
    InitialGuessOutsideDomain
        If the model indicator is 0 at ``x0``.
    SingularProposal
        If the Gauss-Newton proposal cannot be built at ``x0`` under the
        (possibly flat) prior.
    """

    def __init__(self, x0, model: ModelHandle, seed: Optional[int] = None,
                 prior: Optional[GaussianPrior] = None):
        x0 = np.asarray(x0, dtype=float).reshape(-1)
        if x0.shape[0] != model.dim_in:
            raise DimensionMismatch(
                f"x0 has length {x0.shape[0]}, model expects {model.dim_in}"
            )
        if prior is not None and prior.dim != model.dim_in:
            raise DimensionMismatch(
                f"prior dimension {prior.dim}, model expects {model.dim_in}"
            )
        self.model = model
        self._calls_before = model.call_count
        self._call_base = 0
        ev = model.evaluate(x0)
        if not ev.inside:
            raise InitialGuessOutsideDomain("model indicator is 0 at the initial guess")
        self.prior = GaussianPrior.flat(x0) if prior is None else prior
        self.current = point_state_from_eval(self.prior, x0, ev)
        if self.current.proposal is None:
            raise SingularProposal("Gauss-Newton proposal undefined at the initial guess")
        self.policy = BackoffPolicy.none()
        self.rng = np.random.default_rng(seed)
        self._rows: List[np.ndarray] = []
        self.n_accepted = 0
        self.burned = 0
        self._step_count: Dict[int, int] = {-1: 0, 1: 0}
        self.warnings: Dict[str, int] = {"singular_proposals": 0}

    # -- configuration ------------------------------------------------

    def set_prior(self, mean, precision) -> None:
        """Replace the prior and refresh the cached state at the current
        point (no model call is spent)."""
        prior = GaussianPrior.create(mean, precision)
        if prior.dim != self.model.dim_in:
            raise DimensionMismatch(
                f"prior dimension {prior.dim}, model expects {self.model.dim_in}"
            )
        self.prior = prior
        self.current = point_state_from_eval(prior, self.current.x, self.current.eval)
        if self.current.proposal is None:
            raise SingularProposal(
                "Gauss-Newton proposal undefined at the current point under this prior"
            )

    def set_static(self, max_steps: int, factor: float) -> None:
        """Back off up to ``max_steps`` times, dilating by ``factor`` each
        time. ``max_steps=0`` disables back-off."""
        self.policy = BackoffPolicy.static(max_steps, factor)
        self._resize_step_count()

    def set_dynamic(self, max_steps: int) -> None:
        """Back off up to ``max_steps`` times with cubic-interpolation
        dilation factors."""
        self.policy = BackoffPolicy.dynamic(max_steps)
        self._resize_step_count()

    def _resize_step_count(self) -> None:
        for stage in range(1, self.policy.n_stages + 1):
            self._step_count.setdefault(stage, 0)

    # -- outputs --------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.model.dim_in

    @property
    def chain(self) -> np.ndarray:
        if not self._rows:
            return np.empty((0, self.dim))
        return np.array(self._rows)

    @property
    def n_samples(self) -> int:
        return len(self._rows)

    @property
    def accept_rate(self) -> float:
        # counters describe the whole run, including burned transitions
        attempts = self.n_samples + self.burned
        return self.n_accepted / attempts if attempts > 0 else 0.0

    @property
    def call_count(self) -> int:
        return self._call_base + (self.model.call_count - self._calls_before)

    @property
    def step_count(self) -> Dict[int, int]:
        order = [-1] + sorted(k for k in self._step_count if k != -1)
        return {k: self._step_count[k] for k in order}

    # -- sampling -------------------------------------------------------

    def run_sample(self, n_samples: int, divs: int = 1, visual: bool = False,
                   safe: Optional[Union[str, os.PathLike]] = None) -> None:
        """Append ``n_samples`` transitions to the chain.

        Successive calls continue the same chain. ``divs`` splits the work
        into near-equal divisions; after each one, progress is printed when
        ``visual`` and a checkpoint is written when ``safe`` names a path
        (and once more at completion). Divisions do not affect the sampled
        values.
        """
        if n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if divs < 1:
            raise ValueError("divs must be at least 1")
        base, rem = divmod(n_samples, divs)
        done = 0
        for i in range(divs):
            size = base + (1 if i < rem else 0)
            for _ in range(size):
                nxt, stage = kernel.step(
                    self.current, self.policy, self.prior, self.model,
                    self.rng, self.warnings,
                )
                self._rows.append(nxt.x.copy())
                if stage == -1:
                    self._step_count[-1] += 1
                else:
                    self.n_accepted += 1
                    self._step_count[stage] = self._step_count.get(stage, 0) + 1
                    self.current = nxt
            done += size
            if visual:
                print(f"{100.0 * done / n_samples:.1f}% complete", flush=True)
            if safe is not None:
                self.save_checkpoint(safe)
        if safe is not None:
            self.save_checkpoint(safe)

    def burn(self, n_burned: int) -> None:
        """Discard the first ``n_burned`` chain rows. Counters are not
        rewound; they describe the whole run."""
        if not 0 <= n_burned <= self.n_samples:
            raise BurnTooLarge(
                f"cannot burn {n_burned} of {self.n_samples} samples"
            )
        del self._rows[:n_burned]
        self.burned += n_burned

    def posterior_at(self, x) -> float:
        """Unnormalized posterior density at ``x`` (one fresh model call).
        Returns 0 outside the domain."""
        x = np.asarray(x, dtype=float).reshape(-1)
        ev = self.model.evaluate(x)
        return float(np.exp(log_posterior(self.prior, ev, x)))

    # -- checkpointing ----------------------------------------------------

    def _document(self) -> dict:
        algorithm, state = _rng_state_strings(self.rng)
        return _assemble_document(
            dim=self.dim, chain_rows=self._rows, n_samples=self.n_samples,
            n_accepted=self.n_accepted, call_count=self.call_count,
            burned=self.burned, step_count=self._step_count,
            policy=self.policy, prior=self.prior, current_x=self.current.x,
            rng_algorithm=algorithm, rng_state=state,
        )

    def save_checkpoint(self, path: Union[str, os.PathLike]) -> None:
        """Write the full sampler state atomically (temp file + rename)."""
        text = _checkpoint_text(self._document())
        tmp = str(path) + ".tmp"
        try:
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except OSError as exc:
            raise CheckpointWriteFailure(f"could not write checkpoint: {exc}") from exc

    @classmethod
    def load_checkpoint(cls, path: Union[str, os.PathLike],
                        model: ModelHandle) -> "Sampler":
        """Rebuild a sampler from a checkpoint file.

        The model is re-evaluated once at the stored current point to
        rebuild cached quantities; that call is not added to the restored
        call count, so a resumed run reports the same totals as an
        uninterrupted one.
        """
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise IOFailure(f"could not read checkpoint: {exc}") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CorruptCheckpoint(f"checkpoint is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("format_version") != _CHECKPOINT_VERSION:
            raise CorruptCheckpoint("unsupported checkpoint format version")
        stored_checksum = doc.pop("checksum", None)
        if stored_checksum is None:
            raise CorruptCheckpoint("checkpoint has no checksum")

        try:
            dim = int(doc["dim"])
            chain_rows = [np.asarray(row, dtype=float) for row in doc["chain"]]
            counters = doc["counters"]
            n_samples = int(counters["n_samples"])
            n_accepted = int(counters["n_accepted"])
            call_count = int(counters["call_count"])
            burned = int(counters["burned"])
            step_count = {int(k): int(v) for k, v in doc["step_count"].items()}
            pol = doc["policy"]
            policy = BackoffPolicy(
                mode=pol["mode"], max_steps=int(pol["max_steps"]),
                factor=float(pol["factor"]), t_lo=float(pol["t_lo"]),
                t_hi=float(pol["t_hi"]),
            )
            prior = GaussianPrior.create(
                doc["prior"]["mean"],
                np.asarray(doc["prior"]["precision"], dtype=float).reshape(dim, dim),
            )
            current_x = np.asarray(doc["current_x"], dtype=float)
            rng_algorithm = doc["rng"]["algorithm_id"]
            rng_state = [str(s) for s in doc["rng"]["state"]]
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise CorruptCheckpoint(f"malformed checkpoint field: {exc}") from exc

        rebuilt_checksum = _canonical_checksum(_assemble_document(
            dim=dim, chain_rows=chain_rows, n_samples=n_samples,
            n_accepted=n_accepted, call_count=call_count, burned=burned,
            step_count=step_count, policy=policy, prior=prior,
            current_x=current_x, rng_algorithm=rng_algorithm,
            rng_state=rng_state,
        ))
        if rebuilt_checksum != stored_checksum:
            raise CorruptCheckpoint("checksum mismatch")
        if n_samples != len(chain_rows):
            raise CorruptCheckpoint("counter n_samples disagrees with chain length")

        if model.dim_in != dim:
            raise DimensionMismatch(
                f"checkpoint dimension {dim}, model expects {model.dim_in}"
            )
        if current_x.shape[0] != dim:
            raise CorruptCheckpoint("current point has wrong dimension")

        sampler = cls.__new__(cls)
        sampler.model = model
        ev = model.evaluate(current_x)
        if not ev.inside:
            raise InitialGuessOutsideDomain(
                "model indicator is 0 at the checkpointed current point"
            )
        sampler.prior = prior
        sampler.current = point_state_from_eval(prior, current_x, ev)
        if sampler.current.proposal is None:
            raise SingularProposal(
                "Gauss-Newton proposal undefined at the checkpointed current point"
            )
        sampler.policy = policy
        sampler.rng = _rng_from_strings(rng_algorithm, rng_state)
        sampler._rows = chain_rows
        sampler.n_accepted = n_accepted
        sampler.burned = burned
        sampler._step_count = step_count
        sampler.warnings = {"singular_proposals": 0}
        # the reload evaluation recomputes a cached value; keep the counters
        # identical to an uninterrupted run
        sampler._call_base = call_count
        sampler._calls_before = model.call_count
        return sampler
