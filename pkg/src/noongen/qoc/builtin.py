"""Cross-check bundled programs against the hand-written generator stages."""

from dataclasses import dataclass

from .. import generator as G
from ..errors import ContractViolation
from ..fock import overlap

PROB_TOL = 1e-12
OVERLAP_TOL = 1e-12


@dataclass(frozen=True)
class CheckReport:
    program: str
    passed: bool
    branches: int
    max_probability_error: float
    max_overlap_defect: float
    message: str = ""

    def to_json_dict(self):
        return {
            "program": self.program,
            "result": "PASS" if self.passed else "FAIL",
            "branches": self.branches,
            "max_probability_error": self.max_probability_error,
            "max_overlap_defect": self.max_overlap_defect,
            "message": self.message,
        }


def _reference(name, state, params):
    """Builtin branches as ``(path, probability, state_or_None, discarded)``."""
    if name == "circuit1.qoc":
        N = _dual_fock_photons(state)
        cfg = G.GeneratorConfig(N, params["f"])
        return [(b.outcome, b.probability, b.state, False) for b in G.circuit_I(cfg)]
    if name == "circuit2.qoc":
        l, r = int(params["l"]), int(params["r"])
        return [(b.outcome, b.probability, b.state, False) for b in G.circuit_II(state, l, r)]
    if name == "circuit3.qoc":
        return [((), 1.0, G.circuit_III(state), False)]
    if name == "pipeline.qoc":
        N = _dual_fock_photons(state)
        if int(params["N"]) != N:
            raise ContractViolation(f"parameter N={params['N']} does not match the input |{N},{N},0,0>")
        cfg = G.GeneratorConfig(N, params["f"], min_output_photons=int(params["pmin"]))
        out = []
        for o in G.enumerate_outcomes(cfg):
            rec = o.record
            path = (rec.l, rec.r) if rec.Q is None else (rec.l, rec.r, rec.Q)
            ok = o.status is G.Status.SUCCESS
            out.append((path, o.branch_probability, o.output_state if ok else None, not ok))
        return out
    raise ContractViolation(f"no builtin counterpart for {name!r}")


def _dual_fock_photons(state):
    items = state.as_dict()
    if len(items) != 1 or state.mode_count != 4:
        raise ContractViolation("builtin comparison needs a |N,N,0,0> input")
    (occ,) = items
    if occ[0] != occ[1] or occ[2] or occ[3] or occ[0] < 1:
        raise ContractViolation("builtin comparison needs a |N,N,0,0> input")
    return occ[0]


def compare_with_builtin(name, branches, state, params):
    """Compare exhaustive interpreter ``branches`` for bundled program ``name``.

    Branch sets must coincide, probabilities agree within 1e-12 and every
    surviving state overlaps its counterpart with modulus 1 within 1e-12.
    """
    ref = sorted(_reference(name, state, params), key=lambda t: t[0])
    got = sorted(branches, key=lambda b: b.path)
    ref_paths = [t[0] for t in ref]
    got_paths = [b.path for b in got]
    if ref_paths != got_paths:
        missing = sorted(set(ref_paths) - set(got_paths))[:5]
        extra = sorted(set(got_paths) - set(ref_paths))[:5]
        return CheckReport(
            name, False, len(got), float("nan"), float("nan"),
            f"branch sets differ: missing {missing}, unexpected {extra}",
        )
    prob_err = 0.0
    defect = 0.0
    problems = []
    for (path, prob, ref_state, discarded), b in zip(ref, got):
        prob_err = max(prob_err, abs(prob - b.probability))
        if discarded != b.discarded:
            problems.append(f"{path}: discard flag differs")
            continue
        if ref_state is not None and not discarded:
            defect = max(defect, abs(1.0 - overlap(ref_state, b.state)))
    if prob_err > PROB_TOL:
        problems.append(f"probability error {prob_err:.3e}")
    if defect > OVERLAP_TOL:
        problems.append(f"overlap defect {defect:.3e}")
    return CheckReport(name, not problems, len(got), prob_err, defect, "; ".join(problems[:5]))
