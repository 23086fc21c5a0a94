"""
The lab commands. Each handler takes a validated RunConfig and returns a
CommandResult: the verdict, a JSON-ready results tree, the labels of the
failing checks and, for tabular commands, the main table.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from django.conf import settings

from apps.continuous.utils import (
    ContinuousSpec,
    ContinuousSpecError,
    default_contour as continuous_contour,
    default_points,
    diffuse_limit_experiment,
    doubling_check,
    is_valid,
    projection_consistency,
    read_batch,
    residual_sequence,
    sample,
    verify_continuous_loop_equation,
    verify_dixon_anderson,
    write_batch,
)
from apps.continuous.utils.diffuse import CSV_COLUMNS as DIFFUSE_COLUMNS
from apps.cumulants.utils import (
    CumulantError,
    cumulant_table,
    default_contour as discrete_contour,
    default_observations,
    deformation_derivative,
    exact_cumulant,
    joint_moment,
    krawtchouk_loop_setup,
    moment_from_cumulants,
    moment_table,
    set_partitions,
    verify_discrete_loop_equation,
    verify_product_formula,
)
from apps.discrete.utils import (
    ExpPolynomialWeight,
    GeometricWeight,
    MeasureContractError,
    MeasureSpec,
    build_ensemble,
    empirical_frequencies,
    krawtchouk_weight,
    marginal_measure,
    measure_table,
    run_chains,
    total_variation,
)
from apps.jack.utils import (
    JackContractError,
    PartitionError,
    dual_correction,
    dual_jack_principal,
    jack_principal,
    verify_branching,
    verify_cauchy,
    weyl_dimension,
)
from apps.nekrasov.utils import (
    FamilyError,
    NekrasovContractError,
    certify_analyticity,
    check_all_bijections,
    geometric_setup,
    krawtchouk_family,
    theta_continuity,
)
from apps.numerics.utils import NumericsContractError, NumericsDomainError, make_generator
from apps.state_space.utils import (
    StateSpaceContractError,
    enumerate_pattern_keys,
    enumerate_signatures,
    pattern_count,
    signature_count,
)

from .config import RunConfig, RunConfigError
from .reports import Table

logger = logging.getLogger(__name__)

# Errors that mean the parameters are unusable rather than that a check failed.
CONFIG_ERRORS = (
    RunConfigError,
    MeasureContractError,
    StateSpaceContractError,
    FamilyError,
    NekrasovContractError,
    JackContractError,
    PartitionError,
    CumulantError,
    ContinuousSpecError,
    NumericsContractError,
    NumericsDomainError,
)

TABLE_LIMIT = 5000
ALGEBRA_TOL = 1e-12
DEFORMATION_TOL = 1e-6
BRANCHING_TOL = 1e-10
DENSITY_TOL = 1e-6
PROJECTION_TOL = 1e-12
MAX_DEFORMATION_ORDER = 2

DEFAULT_SAMPLES = 10_000
DEFAULT_LOOP_SAMPLES = 100_000
DEFAULT_MCMC_CHAINS = 8


@dataclass
class CommandResult:
    passed: bool
    results: dict
    failures: List[str] = field(default_factory=list)
    table: Optional[Table] = None


Handler = Callable[[RunConfig], CommandResult]
HANDLERS: Dict[str, Handler] = {}


def handler(name: str):
    def register(func: Handler) -> Handler:
        HANDLERS[name] = func
        return func
    return register


def execute(config: RunConfig) -> CommandResult:
    if config.command not in HANDLERS:
        raise RunConfigError(f"unknown command {config.command!r}")
    logger.info(f"Running {config.command} (seed={config.seed}, threads={config.threads})")
    return HANDLERS[config.command](config)


def format_key(key) -> str:
    """Top level first, parts comma-separated, levels separated by '|'."""
    return "|".join(",".join(str(part) for part in level) for level in key)


def build_measure(section: dict) -> MeasureSpec:
    theta, N, k, M = section["theta"], section["N"], section["k"], section["M"]
    weight = section["weight"]
    if weight == "uniform":
        return MeasureSpec.uniform(theta, N, k, M)
    if weight == "geometric":
        return MeasureSpec(theta, N, k, M, tuple(GeometricWeight(q) for q in section["qs"]))
    if weight == "krawtchouk":
        return MeasureSpec.from_levels(theta, N, k, M, {N: krawtchouk_weight(section["q"], N, M, theta)})
    return MeasureSpec.from_levels(theta, N, k, M, {N: ExpPolynomialWeight(tuple(section["coefficients"]))})


def build_family(measure: dict, family: dict):
    """The measure and its φ family; the family kind must match the weight."""
    kind = family.get("kind") or measure["weight"]
    if kind not in ("krawtchouk", "geometric"):
        raise RunConfigError(f"no φ family for weight = {measure['weight']}; use krawtchouk or geometric")
    if measure["weight"] != kind:
        raise RunConfigError(f"the {kind} family needs weight = {kind} in [measure]")
    theta, N, k, M = measure["theta"], measure["N"], measure["k"], measure["M"]
    if kind == "krawtchouk":
        spec, phis = krawtchouk_family(measure["q"], theta, N, k, M)
    else:
        spec, phis = geometric_setup(measure["qs"], theta, N, k, M)
    if family["corrupt"] != 1.0:
        phis = phis.corrupted(family["corrupt"])
    return spec, phis


def build_continuous(section: dict) -> ContinuousSpec:
    return ContinuousSpec(
        section["theta"],
        section["N"],
        section["k"],
        section["a_minus"],
        section["a_plus"],
        tuple(section["potential"]),
    )


def _sides(choice: str) -> Tuple[str, ...]:
    return ("R1", "R2") if choice == "both" else (choice,)


def _variants(choice: str) -> Tuple[str, ...]:
    return ("b1", "b2") if choice == "both" else (choice,)


@handler("enumerate")
def run_enumerate(config: RunConfig) -> CommandResult:
    section = config.section("measure")
    N, k, M = section["N"], section["k"], section["M"]
    keys = list(enumerate_pattern_keys(N, k, M))
    expected = pattern_count(N, k, M)
    distinct = len(set(keys))
    results = {
        "N": N,
        "k": k,
        "M": M,
        "count": len(keys),
        "closed_form": expected,
        "distinct": distinct,
        "signatures": signature_count(N, M),
    }
    if len(keys) <= TABLE_LIMIT:
        results["patterns"] = [format_key(key) for key in keys]

    failures = []
    if len(keys) != expected:
        failures.append(f"enumerated {len(keys)} patterns, closed form gives {expected}")
    if distinct != len(keys):
        failures.append(f"{len(keys) - distinct} duplicate patterns")
    table = Table(["index", "pattern"], [{"index": n, "pattern": format_key(key)} for n, key in enumerate(keys)])
    return CommandResult(not failures, results, failures, table)


def _lower_levels_trivial(spec: MeasureSpec) -> bool:
    return all(isinstance(w, GeometricWeight) and complex(w.q) == 1 for w in spec.weights[:-1])


@handler("measure")
def run_measure(config: RunConfig) -> CommandResult:
    spec = build_measure(config.section("measure"))
    sampling = config.section("sampling")
    tol = config.tol if config.tol is not None else PROJECTION_TOL
    ensemble = build_ensemble(spec)
    table = dict(zip(ensemble.keys, ensemble.probs))
    normalization = abs(complex(np.sum(ensemble.probs)) - 1.0)

    results = {
        "measure": spec.describe(),
        "size": len(ensemble),
        "partition_function": ensemble.partition_function,
        "condition": ensemble.condition,
        "normalization_error": normalization,
    }
    failures = []
    if normalization > tol:
        failures.append(f"probabilities sum to 1 only up to {normalization:.3e}")

    # The projection onto levels >= m is the k = m measure when w_j ≡ 1 below the top.
    projections = []
    if spec.k == 1 and spec.N > 1 and _lower_levels_trivial(spec):
        for m in range(2, spec.N + 1):
            direct = MeasureSpec(spec.theta, spec.N, m, spec.M, spec.weights[m - 1:])
            distance = total_variation(marginal_measure(spec, m), measure_table(direct))
            projections.append({"m": m, "total_variation": distance, "passed": distance < tol})
            if distance >= tol:
                failures.append(f"projection onto levels >= {m}: total variation {distance:.3e}")
    results["projections"] = projections

    if sampling.get("samples"):
        chains = sampling.get("chains") or DEFAULT_MCMC_CHAINS
        length = -(-sampling["samples"] // chains)
        runs = run_chains(
            spec,
            chains,
            length,
            burn_in=sampling.get("burn_in", 1000),
            seed=config.seed,
            thin=sampling["thin"],
            threads=config.threads,
        )
        frequencies = empirical_frequencies(key for keys in runs for key in keys)
        results["mcmc"] = {
            "chains": chains,
            "samples": chains * length,
            "total_variation": total_variation(frequencies, table),
        }

    rows = [{"pattern": format_key(key), "probability": prob} for key, prob in table.items()]
    if len(rows) <= TABLE_LIMIT:
        results["probabilities"] = {row["pattern"]: row["probability"] for row in rows}
    return CommandResult(not failures, results, failures, Table(["pattern", "probability"], rows))


@handler("verify-nekrasov")
def run_verify_nekrasov(config: RunConfig) -> CommandResult:
    measure, family = config.section("measure"), config.section("family")
    contour = config.section("contour")
    spec, phis = build_family(measure, family)
    violations = phis.validate(spec)

    results = {"family": phis.describe(), "measure": spec.describe(), "compatibility_violations": len(violations)}
    failures = [
        f"{v.relation} relation fails at level {v.level}, x={v.point:.6g}" for v in violations[:10]
    ]
    rows = []
    for which in _sides(family["which"]):
        report = certify_analyticity(
            spec,
            phis,
            which,
            tol=config.tol if config.tol is not None else settings.CORNERS_LAB_TOLERANCE,
            theta_branch=family.get("branch"),
            quadrature_tol=contour.get("quadrature_tol", settings.CORNERS_LAB_QUADRATURE_TOL),
            max_nodes=contour.get("max_nodes", settings.CORNERS_LAB_MAX_NODES),
            threads=config.threads,
        )
        results[which] = report.as_dict()
        for residue in report.residues:
            rows.append(
                {
                    "which": which,
                    "location": residue.location,
                    "members": ";".join(f"{a},{b}" for a, b in residue.members),
                    "boundary": residue.boundary,
                    "modulus": abs(residue.residue),
                    "nodes": residue.nodes,
                    "passed": residue.passed,
                }
            )
            if not residue.passed:
                failures.append(f"{which} residue at s={residue.location:.6g}: |res| = {abs(residue.residue):.3e}")
        if report.max_moment >= report.tol:
            failures.append(f"{which} enclosing-circle moment {report.max_moment:.3e}")

        if measure["weight"] == "geometric" and family["corrupt"] == 1.0 and spec.theta != 1:
            continuity = theta_continuity(which, measure["qs"], spec.N, spec.k, spec.M)
            results[f"{which}_continuity"] = continuity.as_dict()
            if not continuity.passed:
                failures.append(f"{which} θ→1 limit off by {continuity.max_error:.3e}")

    table = Table(["which", "location", "members", "boundary", "modulus", "nodes", "passed"], rows)
    return CommandResult(not failures, results, failures, table)


@handler("verify-bijection")
def run_verify_bijection(config: RunConfig) -> CommandResult:
    measure, family = config.section("measure"), config.section("family")
    spec, phis = build_family(measure, family)
    kwargs = {"threads": config.threads}
    if config.tol is not None:
        kwargs["tol"] = config.tol

    results, failures, rows = {"family": phis.describe(), "measure": spec.describe()}, [], []
    for variant in _variants(family["variant"]):
        reports = check_all_bijections(spec, phis, variant, **kwargs)
        results[variant] = {
            "pairs": len(reports),
            "failed": sum(not r.passed for r in reports),
            "max_identity_gap": max((r.max_identity_gap for r in reports), default=0.0),
            "reports": [r.as_dict() for r in reports],
        }
        for report in reports:
            row = report.as_dict()
            del row["counterexamples"]
            rows.append(row)
            if not report.passed:
                reason = report.counterexamples[0]["reason"] if report.counterexamples else "not a bijection"
                failures.append(f"{variant} at s={report.location:.6g}, i={report.i}: {reason}")

    fieldnames = [
        "variant", "s", "a", "b", "i", "domain_size", "codomain_size",
        "injective", "surjective", "level_order", "max_identity_gap", "passed",
    ]
    return CommandResult(not failures, results, failures, Table(fieldnames, rows))


@handler("verify-jack")
def run_verify_jack(config: RunConfig) -> CommandResult:
    section = config.section("jack")
    tol = config.tol if config.tol is not None else BRANCHING_TOL
    N = section["N"]
    signatures = [s.parts for s in enumerate_signatures(N, section["max_part"])]

    branching, weyl, dual, failures = [], [], [], []
    for theta in section["thetas"]:
        worst = 0.0
        for parts in signatures:
            check = verify_branching(parts, N, theta)
            worst = max(worst, check.residual)
            if check.residual >= tol:
                failures.append(f"branching λ={parts}, θ={theta}: residual {check.residual:.3e}")

            product = jack_principal(parts, N, theta) * dual_correction(parts, theta)
            gap = abs(dual_jack_principal(parts, N, theta) - product) / abs(product)
            dual.append(gap)
            if gap >= tol:
                failures.append(f"dual hook product λ={parts}, θ={theta}: gap {gap:.3e}")

            if theta == 1.0:
                expected = weyl_dimension(parts, N)
                gap = abs(jack_principal(parts, N, 1.0) - expected) / expected
                weyl.append(gap)
                if gap >= tol:
                    failures.append(f"Weyl dimension λ={parts}: gap {gap:.3e}")
        branching.append({"theta": theta, "partitions": len(signatures), "max_residual": worst})

    cauchy = []
    for n in section["cauchy_N"]:
        for q in section["cauchy_q"]:
            for theta in section["thetas"]:
                check = verify_cauchy(n, theta, q, section["truncation"])
                cauchy.append(
                    {
                        "N": n,
                        "q": q,
                        "theta": theta,
                        "truncation": section["truncation"],
                        "truncated_sum": check.truncated_sum,
                        "target": check.target,
                        "residual": check.residual,
                        "tail_bound": check.tail_bound,
                        "terms": check.terms,
                        "passed": check.passed,
                    }
                )
                if not check.passed:
                    failures.append(
                        f"Cauchy N={n}, q={q}, θ={theta}: residual {check.residual:.3e} > bound {check.tail_bound:.3e}"
                    )

    results = {
        "N": N,
        "max_part": section["max_part"],
        "tol": tol,
        "branching": branching,
        "cauchy": cauchy,
        "dual_max_gap": max(dual, default=0.0),
        "weyl_max_gap": max(weyl, default=None),
    }
    return CommandResult(not failures, results, failures)


@handler("verify-discrete-loop")
def run_verify_discrete_loop(config: RunConfig) -> CommandResult:
    measure, family = config.section("measure"), config.section("family")
    observables, contour_section = config.section("observables"), config.section("contour")
    if measure["weight"] != "krawtchouk":
        raise RunConfigError("the discrete loop equations are set up for weight = krawtchouk")

    spec, phi_plus, phi_minus = krawtchouk_loop_setup(
        measure["q"], measure["theta"], measure["N"], measure["k"], measure["M"]
    )
    if family["corrupt"] != 1.0:
        phi_plus = phi_plus.scaled(family["corrupt"])
    L = observables["L"]
    counts = observables.get("counts", {})
    contour = discrete_contour(spec, L)
    obs, v = default_observations(spec, L, counts, contour)

    report = verify_discrete_loop_equation(
        spec,
        phi_plus,
        phi_minus,
        obs,
        v,
        contour=contour,
        theta_branch=family.get("branch"),
        tol=config.tol if config.tol is not None else settings.CORNERS_LAB_TOLERANCE,
        quadrature_tol=contour_section.get("quadrature_tol", settings.CORNERS_LAB_QUADRATURE_TOL),
        max_nodes=contour_section.get("max_nodes", settings.CORNERS_LAB_MAX_NODES),
        fixed_nodes=contour_section.get("nodes"),
        threads=config.threads,
    )
    results = {"measure": spec.describe(), "observables": obs.describe(), **report.as_dict()}
    failures = []
    if not report.passed:
        largest = max(report.terms, key=lambda term: abs(term.value))
        failures.append(
            f"loop equation total {report.residual:.3e} against largest term {largest.label} ({abs(largest.value):.3e})"
        )
    return CommandResult(report.passed, results, failures)


def _density_checks(spec: ContinuousSpec, probes: int, seed: int) -> Tuple[dict, List[str]]:
    rng = make_generator(seed)
    results, failures = {}, []
    if spec.N >= 2:
        nodes = np.sort(rng.uniform(spec.a_minus, spec.a_plus, spec.N))
        dixon = verify_dixon_anderson(nodes, spec.theta)
        results["dixon_anderson"] = dixon.as_dict()
        if dixon.residual >= DENSITY_TOL:
            failures.append(f"Dixon-Anderson integral off by {dixon.residual:.3e}")
    if spec.k < spec.N and probes:
        gaps = [probe.relative_gap for probe in projection_consistency(spec, probes=probes, seed=seed)]
        results["projection"] = {"probes": len(gaps), "max_relative_gap": max(gaps)}
        if max(gaps) >= DENSITY_TOL:
            failures.append(f"integrating out level {spec.k} misses by {max(gaps):.3e}")
    return results, failures


@handler("sample-continuous")
def run_sample_continuous(config: RunConfig) -> CommandResult:
    spec = build_continuous(config.section("continuous"))
    sampling = config.section("sampling")
    options = {
        key: sampling[key] for key in ("burn_in", "chains", "step", "grid_points") if key in sampling
    }
    batch = sample(
        spec,
        sampling.get("samples", DEFAULT_SAMPLES),
        seed=config.seed,
        threads=config.threads,
        thin=sampling["thin"],
        **options,
    )
    path = write_batch(batch, config.artifact_path(".bin"))
    valid = int(np.count_nonzero(is_valid(spec, batch.samples)))

    results = {"spec": spec.describe(), "diagnostics": batch.diagnostics(), "batch": path.name, "valid": valid}
    failures = []
    if valid != len(batch):
        failures.append(f"{len(batch) - valid} samples leave the interlacing support")
    checks, problems = _density_checks(spec, sampling["probes"], config.seed)
    results.update(checks)
    failures.extend(problems)
    return CommandResult(not failures, results, failures)


@handler("verify-continuous-loop")
def run_verify_continuous_loop(config: RunConfig) -> CommandResult:
    sampling, observables = config.section("sampling"), config.section("observables")
    if observables["L"] != 1.0:
        raise RunConfigError("the continuous loop equations take L = 1")
    options = {key: sampling[key] for key in ("burn_in", "chains", "step", "grid_points") if key in sampling}
    samples = sampling.get("samples", DEFAULT_LOOP_SAMPLES)

    if sampling.get("batch"):
        if sampling["doubling"]:
            raise RunConfigError("the doubling check needs fresh samples, not a stored batch")
        batch = read_batch(sampling["batch"])
        spec = batch.spec
    else:
        spec = build_continuous(config.section("continuous"))
        batch = sample(spec, samples, seed=config.seed, threads=config.threads, thin=sampling["thin"], **options)

    nodes = config.section("contour").get("nodes")
    contour = continuous_contour(spec, nodes) if nodes else continuous_contour(spec)
    obs, v = default_points(spec, observables.get("counts", {}), contour)
    check = {key: sampling[key] for key in ("batches", "sigmas") if key in sampling}
    report = verify_continuous_loop_equation(batch, obs, v, contour, **check)

    results = {"diagnostics": batch.diagnostics(), **report.as_dict()}
    failures = []
    if not report.passed:
        failures.append(f"|∮| = {report.residual:.3e} exceeds {report.sigmas:g} × stderr {report.stderr:.3e}")

    if sampling["doubling"]:
        larger = sample(
            spec, 2 * samples, seed=(config.seed + 1) % 2 ** 64, threads=config.threads, thin=sampling["thin"], **options
        )
        doubled = verify_continuous_loop_equation(larger, obs, v, contour, **check)
        shrinks = doubling_check(report, doubled)
        results["doubling"] = {"sequence": residual_sequence([report, doubled]), "passed": shrinks}
        if not shrinks:
            failures.append(f"residual grows with more samples: {report.residual:.3e} → {doubled.residual:.3e}")
    return CommandResult(not failures, results, failures)


@handler("diffuse-limit")
def run_diffuse_limit(config: RunConfig) -> CommandResult:
    spec = build_continuous(config.section("continuous"))
    sampling = config.section("sampling")
    keys = ("exact_limit", "discrete_samples", "continuous_samples", "reference")
    options = {key: sampling[key] for key in keys if key in sampling}
    report = diffuse_limit_experiment(
        spec,
        sampling.get("L_values", [5, 10, 20, 40]),
        seed=config.seed,
        threads=config.threads,
        **options,
    )
    failures = []
    if not report.decreasing:
        failures.append(f"errors do not decrease with L: {['%.3e' % e for e in report.errors]}")
    elif not report.passed:
        failures.append(f"final error {report.errors[-1]:.3e} is above the 1/L bound")
    return CommandResult(report.passed, report.as_dict(), failures, Table(list(DIFFUSE_COLUMNS), report.csv_rows()))


@handler("verify-cumulants")
def run_verify_cumulants(config: RunConfig) -> CommandResult:
    spec = build_measure(config.section("measure"))
    observables = config.section("observables")
    tol = config.tol if config.tol is not None else ALGEBRA_TOL
    ensemble = build_ensemble(spec)
    rng = make_generator(config.seed)
    size = len(ensemble)
    x, y, a, b = [rng.uniform(-1.0, 1.0, size) + 1j * rng.uniform(-1.0, 1.0, size) for _ in range(4)]
    variables = [x, y, a, b]

    round_trip = abs(moment_from_cumulants(variables, ensemble) - joint_moment(variables, ensemble))
    moments = {}
    for partition in set_partitions(len(variables)):
        for block in partition:
            moments[frozenset(block)] = complex(joint_moment(variables, ensemble, block))
    back = moment_table(cumulant_table(moments, len(variables)), len(variables))
    table_gap = max(abs(back[subset] - value) for subset, value in moments.items())
    product_gap = max(
        verify_product_formula(x, y, [], ensemble), verify_product_formula(x, y, [a, b], ensemble)
    )
    results = {
        "measure": spec.describe(),
        "moment_round_trip": round_trip,
        "table_round_trip": table_gap,
        "product_formula": product_gap,
        "tol": tol,
    }
    failures = [
        f"{name} gap {value:.3e}"
        for name, value in (("moment round trip", round_trip), ("table round trip", table_gap), ("product formula", product_gap))
        if value >= tol
    ]

    counts = observables.get("counts", {spec.N: 1})
    if sum(counts.values()) > MAX_DEFORMATION_ORDER:
        raise RunConfigError(f"the finite-difference check takes at most {MAX_DEFORMATION_ORDER} points")
    obs, _ = default_observations(spec, observables["L"], counts)
    xi = np.sum(ensemble.ell[spec.N] ** 2, axis=1)
    derivative = deformation_derivative(spec, obs, xi)
    exact = exact_cumulant(spec, obs, xi)
    gap = abs(derivative - exact)
    results["deformation"] = {
        "observables": obs.describe(),
        "derivative": derivative,
        "exact": exact,
        "gap": gap,
        "tol": DEFORMATION_TOL,
    }
    if gap >= DEFORMATION_TOL * max(1.0, abs(exact)):
        failures.append(f"deformation derivative differs from the exact cumulant by {gap:.3e}")
    return CommandResult(not failures, results, failures)
