"""Parameter-space exploration: grid or seeded random sampling plus the
accuracy/speed Pareto front."""

from __future__ import annotations

import io
import itertools
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from slamkit.api import ParameterSpec, ParamType, load_algorithm
from slamkit.plugins import resolve_library
from slamkit.runner.benchmark import RunSpec, run_benchmark


class SweepError(Exception):
    pass


class NoValidSamples(SweepError):
    pass


@dataclass
class ParameterDomain:
    """Values to explore for one declared parameter.

    Exactly one of `values` (explicit list) or `bounds` (min/max for random
    sampling, or min/max/step for grids) is given.
    """

    values: list[Any] | None = None
    bounds: tuple[float, float] | None = None
    step: float | None = None

    def grid_values(self, spec: ParameterSpec) -> list[Any]:
        if self.values is not None:
            return [spec.validate(v) for v in self.values]
        if self.bounds is None or self.step is None:
            raise SweepError("grid domains need explicit values or bounds+step")
        lo, hi = self.bounds
        raw = np.arange(lo, hi + self.step * 0.5, self.step)
        return [spec.validate(v) for v in raw.tolist()]

    def sample(self, spec: ParameterSpec, rng: np.random.Generator) -> Any:
        if self.values is not None:
            return spec.validate(self.values[int(rng.integers(0, len(self.values)))])
        if self.bounds is None:
            raise SweepError("random domains need explicit values or bounds")
        lo, hi = self.bounds
        if spec.value_type == ParamType.INT:
            return spec.validate(int(rng.integers(int(lo), int(hi) + 1)))
        return spec.validate(float(rng.uniform(lo, hi)))


@dataclass
class SweepSpec:
    base: RunSpec  # exactly one algorithm; its parameters are swept
    domains: dict[str, ParameterDomain]
    strategy: str = "grid"  # grid | random
    random_count: int = 0
    seed: int = 0
    # co-running configurations perturb each other's timings, so parallel
    # execution is opt-in and marks timing-derived objectives unreliable
    parallel_workers: int = 1

    def validate_against(self, specs: dict[str, ParameterSpec]) -> None:
        for name, domain in self.domains.items():
            if name not in specs:
                raise SweepError(f"swept parameter {name!r} is not declared by the algorithm")
            spec = specs[name]
            # every domain value must pass the declared bounds
            if domain.values is not None:
                for value in domain.values:
                    spec.validate(value)
            elif domain.bounds is not None and spec.bounds is not None:
                lo, hi = domain.bounds
                spec.validate(lo)
                spec.validate(hi)


@dataclass
class SweepSample:
    parameters: dict[str, Any]
    mean_duration: float | None = None  # seconds per processed frame
    ate_rmse: float | None = None
    failure: str | None = None

    @property
    def valid(self) -> bool:
        return self.failure is None and self.mean_duration is not None and self.ate_rmse is not None


@dataclass
class SweepResult:
    samples: list[SweepSample]
    front: list[SweepSample] = field(default_factory=list)
    timing_reliable: bool = True  # False when configurations ran in parallel


def declared_parameter_specs(library: str) -> dict[str, ParameterSpec]:
    """Configure a scratch handle just to read the declared parameters."""
    handle = load_algorithm(resolve_library(library))
    handle.configure()
    return dict(handle.config.parameters)


def _configurations(spec: SweepSpec, specs: dict[str, ParameterSpec]) -> list[dict[str, Any]]:
    names = list(spec.domains.keys())
    if spec.strategy == "grid":
        axes = [spec.domains[n].grid_values(specs[n]) for n in names]
        return [dict(zip(names, combo)) for combo in itertools.product(*axes)]
    if spec.strategy == "random":
        if spec.random_count < 1:
            raise SweepError("random strategy needs random_count >= 1")
        rng = np.random.default_rng(spec.seed)
        return [
            {n: spec.domains[n].sample(specs[n], rng) for n in names}
            for _ in range(spec.random_count)
        ]
    raise SweepError(f"unknown sweep strategy {spec.strategy!r}")


def _run_configuration(base: RunSpec, overrides: dict[str, Any]) -> SweepSample:
    base_algo = base.algorithms[0]
    run_spec = replace(
        base,
        algorithms=[replace(base_algo, parameters={**base_algo.parameters, **overrides})],
        output_path=None,
    )
    sample = SweepSample(parameters=overrides)
    try:
        report = run_benchmark(run_spec, stream=io.StringIO())[0]
        if report.failure is not None:
            sample.failure = report.failure
        else:
            sample.ate_rmse = report.summary.ate_rmse
            if report.summary.mean_fps:
                sample.mean_duration = 1.0 / report.summary.mean_fps
            if sample.ate_rmse is None or sample.mean_duration is None:
                sample.failure = "run produced no ATE or timing objective"
    except Exception as exc:
        sample.failure = str(exc)
    return sample


def run_sweep(spec: SweepSpec) -> SweepResult:
    """One fresh benchmark per configuration; failures recorded, not raised."""
    if len(spec.base.algorithms) != 1:
        raise SweepError("sweeps explore the parameter space of exactly one algorithm")
    declared = declared_parameter_specs(spec.base.algorithms[0].library)
    spec.validate_against(declared)

    configurations = _configurations(spec, declared)
    if spec.parallel_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=spec.parallel_workers) as pool:
            samples = list(pool.map(lambda o: _run_configuration(spec.base, o), configurations))
    else:
        samples = [_run_configuration(spec.base, overrides) for overrides in configurations]
    return SweepResult(
        samples=samples,
        front=compute_pareto(samples),
        timing_reliable=spec.parallel_workers <= 1,
    )


def compute_pareto(samples: list[SweepSample]) -> list[SweepSample]:
    """Exact non-dominated subset under (minimize duration, minimize ATE),
    ordered by duration. A sample dominates another when it is <= in both
    objectives and strictly better in at least one.

    Sort-scan over duration groups, O(n log n): a group (equal duration)
    contributes exactly its minimum-ATE members, and only when that minimum
    strictly improves on everything faster.
    """
    valid = [s for s in samples if s.valid]
    if not valid:
        raise NoValidSamples("no sweep sample carries both objectives")
    ordered = sorted(valid, key=lambda s: (s.mean_duration, s.ate_rmse))
    front: list[SweepSample] = []
    best_ate = float("inf")
    i = 0
    while i < len(ordered):
        j = i
        while j < len(ordered) and ordered[j].mean_duration == ordered[i].mean_duration:
            j += 1
        group = ordered[i:j]
        group_min = group[0].ate_rmse  # group is ATE-sorted
        if group_min < best_ate:
            front.extend(s for s in group if s.ate_rmse == group_min)
            best_ate = group_min
        i = j
    return front
