"""Scenario documents: JSON in, validated domain objects out."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigParseError, ConfigValidationError
from .gamma import Budget
from .homology import CohomologyClass, CurveSystem, standard_curves
from .isotopy import Cylinder, Letter, TwistProfile, TwistWord, standard_cylinders
from .surface import BUILDERS, FlatSurface

SCHEMA_VERSION = 1
SUITES = ("flux-loop-demo", "flux-oracle", "injectivity", "invariants", "lemma3", "theorem2")


@dataclass
class Scenario:
    surface: FlatSurface
    cylinders: dict[str, Cylinder]
    system: CurveSystem
    phis: list[CohomologyClass]
    words: list[TwistWord]
    theorem2_cases: list[tuple[str, str]]
    injectivity_profiles: list[TwistProfile]
    suites: list[str]
    budget: Budget
    source: str = "<memory>"
    extra: dict = field(default_factory=dict)

    def word(self, word_id: str) -> TwistWord:
        return next(w for w in self.words if w.id == word_id)

    def phi(self, phi_id: str) -> CohomologyClass:
        return next(p for p in self.phis if p.id == phi_id)


def _need(d, key, where):
    if not isinstance(d, dict) or key not in d:
        raise ConfigValidationError(f"missing required field {key!r}", where)
    return d[key]


def _num(v, where, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigValidationError(f"expected a number, got {v!r}", where)
    if positive and v <= 0:
        raise ConfigValidationError(f"must be positive, got {v!r}", where)
    return float(v)


def parse_profile(spec: dict, cylinder: Cylinder, where: str) -> TwistProfile:
    kind = spec.get("kind", "piecewise") if isinstance(spec, dict) else None
    try:
        if kind == "tent":
            prof = TwistProfile.tent(
                cylinder,
                _num(_need(spec, "center", where), f"{where}.center"),
                _num(_need(spec, "halfWidth", where), f"{where}.halfWidth", positive=True),
                _num(spec.get("height", 1.0), f"{where}.height"),
            )
        elif kind in ("quadratic", "cubic"):
            build = TwistProfile.quadratic_bump if kind == "quadratic" else TwistProfile.cubic_bump
            a = _num(_need(spec, "a", where), f"{where}.a")
            b = _num(_need(spec, "b", where), f"{where}.b")
            if b <= a:
                raise ConfigValidationError("need a < b", where)
            prof = build(cylinder, a, b, _num(spec.get("height", 1.0), f"{where}.height"))
        elif kind == "constant":
            prof = TwistProfile.constant(cylinder, _num(_need(spec, "value", where), f"{where}.value"))
        elif kind == "piecewise":
            prof = TwistProfile(
                cylinder, tuple(_need(spec, "breakpoints", where)), tuple(map(tuple, _need(spec, "coeffs", where)))
            )
        else:
            raise ConfigValidationError(f"unknown profile kind {kind!r}", f"{where}.kind")
    except ValueError as exc:
        raise ConfigValidationError(str(exc), where) from None
    if "integral" in spec:
        target = _num(spec["integral"], f"{where}.integral")
        current = prof.integral()
        if current == 0:
            raise ConfigValidationError("cannot rescale a profile with zero integral", where)
        prof = prof.scaled(target / current)
    return prof


def parse_word(spec: dict, cylinders: dict[str, Cylinder], where: str) -> TwistWord:
    letters = []
    for k, ls in enumerate(_need(spec, "letters", where)):
        lw = f"{where}.letters[{k}]"
        cid = _need(ls, "cylinder", lw)
        if cid not in cylinders:
            raise ConfigValidationError(f"unknown cylinder {cid!r}", f"{lw}.cylinder")
        prof = parse_profile(_need(ls, "profile", lw), cylinders[cid], f"{lw}.profile")
        letters.append(Letter(prof, _num(ls.get("scale", 1.0), f"{lw}.scale")))
    return TwistWord(tuple(letters), id=str(_need(spec, "id", where)))


def random_profile(rng: np.random.Generator, cylinder: Cylinder) -> TwistProfile:
    h = cylinder.height
    a = cylinder.z0 + h * rng.uniform(0.05, 0.4)
    b = cylinder.z0 + h * rng.uniform(0.6, 0.95)
    height = rng.uniform(0.5, 2.0)
    kind = rng.integers(3)
    if kind == 0:
        return TwistProfile.tent(cylinder, (a + b) / 2, (b - a) / 2, height)
    if kind == 1:
        return TwistProfile.quadratic_bump(cylinder, a, b, height)
    return TwistProfile.cubic_bump(cylinder, a, b, height)


def random_case(seed: int, cylinders: dict[str, Cylinder], max_length: int = 5):
    """A random word of length 1..max_length over all cylinders and a phi with entries in [-1, 1]."""
    rng = np.random.default_rng(seed)
    ids = sorted(cylinders)
    n = int(rng.integers(1, max_length + 1))
    letters = tuple(
        Letter(random_profile(rng, cylinders[ids[rng.integers(len(ids))]]), float(rng.uniform(-1.5, 1.5)))
        for _ in range(n)
    )
    phi = CohomologyClass(rng.uniform(-1.0, 1.0, len(ids)), id=f"random-phi-{seed}")
    return TwistWord(letters, id=f"random-word-{seed}"), phi


def unit_profiles(system: CurveSystem, cylinders: dict[str, Cylinder]) -> list[TwistProfile]:
    """One tent per basis cylinder (ordered like the curves) with integral 1."""
    by_core = {c.core: c for c in cylinders.values()}
    out = []
    for cid in system.ids:
        cyl = by_core[cid]
        mid = (cyl.z0 + cyl.z1) / 2
        prof = TwistProfile.tent(cyl, mid, cyl.height / 4, 1.0)
        out.append(prof.scaled(1.0 / prof.integral()))
    return out


def from_dict(doc: dict, source: str = "<memory>") -> Scenario:
    if not isinstance(doc, dict):
        raise ConfigValidationError("scenario must be a JSON object")
    version = doc.get("schemaVersion", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigValidationError(f"unsupported schemaVersion {version!r}", "schemaVersion")

    sdoc = _need(doc, "surface", "")
    try:
        if isinstance(sdoc, str):
            if sdoc not in BUILDERS:
                raise ConfigValidationError(f"unknown builtin surface {sdoc!r}", "surface")
            surface = BUILDERS[sdoc]()
        else:
            surface = FlatSurface.from_dict(sdoc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigValidationError(str(exc), "surface") from None

    cdoc = doc.get("cylinders", "standard")
    try:
        if cdoc == "standard":
            cylinders = standard_cylinders(surface)
        else:
            cylinders = {}
            for k, c in enumerate(cdoc):
                cyl = Cylinder.from_dict(c)
                cyl.validate(surface)
                cylinders[cyl.id] = cyl
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigValidationError(str(exc), "cylinders") from None

    kdoc = doc.get("curves", "standard")
    try:
        system = standard_curves(surface) if kdoc == "standard" else CurveSystem.from_dict(surface, kdoc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigValidationError(str(exc), "curves") from None
    for cyl in cylinders.values():
        if cyl.core not in system.ids:
            raise ConfigValidationError(f"core curve {cyl.core!r} is not a basis curve", f"cylinders.{cyl.id}")

    m = len(system.curves)
    phis = []
    for k, p in enumerate(doc.get("phis", [])):
        coeffs = _need(p, "coeffs", f"phis[{k}]")
        if not isinstance(coeffs, list) or len(coeffs) != m:
            raise ConfigValidationError(f"need {m} coefficients", f"phis[{k}].coeffs")
        phis.append(CohomologyClass([_num(c, f"phis[{k}].coeffs") for c in coeffs], id=str(_need(p, "id", f"phis[{k}]"))))

    words = [parse_word(w, cylinders, f"words[{k}]") for k, w in enumerate(doc.get("words", []))]
    for label, items in (("phis", phis), ("words", words)):
        ids = [x.id for x in items]
        if len(set(ids)) != len(ids):
            raise ConfigValidationError("ids must be unique", label)

    cases = []
    tdoc = doc.get("theorem2", {})
    pairs = tdoc.get("cases")
    if pairs is None:
        pairs = [{"word": w.id, "phi": p.id} for w in words for p in phis]
    for k, pair in enumerate(pairs):
        wid, pid = _need(pair, "word", f"theorem2.cases[{k}]"), _need(pair, "phi", f"theorem2.cases[{k}]")
        if wid not in {w.id for w in words}:
            raise ConfigValidationError(f"unknown word {wid!r}", f"theorem2.cases[{k}].word")
        if pid not in {p.id for p in phis}:
            raise ConfigValidationError(f"unknown phi {pid!r}", f"theorem2.cases[{k}].phi")
        cases.append((wid, pid))
    generated = set()
    rdoc = tdoc.get("random")
    if rdoc:
        count = int(_num(_need(rdoc, "count", "theorem2.random"), "theorem2.random.count"))
        seed0 = int(_num(rdoc.get("seed", 0), "theorem2.random.seed"))
        max_len = int(_num(rdoc.get("maxLength", 5), "theorem2.random.maxLength", positive=True))
        for k in range(count):
            w, p = random_case(seed0 + k, cylinders, max_len)
            words.append(w)
            phis.append(p)
            cases.append((w.id, p.id))
            generated |= {w.id, p.id}

    idoc = doc.get("injectivity", {})
    if "profiles" in idoc:
        inj = []
        for k, spec in enumerate(idoc["profiles"]):
            cid = _need(spec, "cylinder", f"injectivity.profiles[{k}]")
            if cid not in cylinders:
                raise ConfigValidationError(f"unknown cylinder {cid!r}", f"injectivity.profiles[{k}].cylinder")
            inj.append(parse_profile(spec, cylinders[cid], f"injectivity.profiles[{k}]"))
    else:
        inj = unit_profiles(system, cylinders)

    suites = doc.get("suites", list(SUITES))
    for s in suites:
        if s not in SUITES:
            raise ConfigValidationError(f"unknown suite {s!r}", "suites")

    bdoc = doc.get("budget", {})
    tol = doc.get("tolerances", {})
    try:
        budget = Budget(
            samples=int(_num(bdoc.get("samples", 1_000_000), "budget.samples", positive=True)),
            grid=int(_num(bdoc.get("grid", 1024), "budget.grid", positive=True)),
            seed=int(_num(bdoc.get("seed", 0), "budget.seed")),
            workers=int(_num(bdoc.get("workers", 1), "budget.workers", positive=True)),
            sigma=_num(tol.get("sigma", 3.0), "tolerances.sigma", positive=True),
            tolerance_scale=_num(tol.get("scale", 1.0), "tolerances.scale", positive=True),
        )
    except ValueError as exc:
        raise ConfigValidationError(str(exc), "budget") from None

    return Scenario(
        surface, cylinders, system, phis, words, cases, inj, list(suites), budget, source, {"generated": generated}
    )


def loads(text: str, source: str = "<string>") -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{source}: {exc.msg}", exc.lineno, exc.colno) from None
    return from_dict(doc, source)


def load(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text, str(path))


def default_scenario_text() -> str:
    return resources.files("volflux").joinpath("scenarios/default.json").read_text()


def load_default() -> Scenario:
    return loads(default_scenario_text(), "default.json")
