"""deathlink command line: normalize, profile, link, synth, merge.

Exit codes: 0 success, 1 fatal configuration / IO error, 2 finished but the
share of rejected input rows exceeded ``max_row_error_fraction``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import reports
from .ingest import IngestError, SourceLayout, merge_monthly_update, read_source, serialize_records, standard_layout
from .linker import (
    SINGLE_RECORD,
    VALIDATION_MODES,
    Category,
    Thresholds,
    TokenizedDataset,
    categorize,
    link_deaths,
    rank_tokens,
    validate_all,
)
from .normalize import IDENTITY_FIELDS, ConfigError, ValidityConfig
from .pipeline import prepare
from .profile import FieldProfiler, TokenProfiler, invalid_ssn_breakdown
from .synth import SynthConfig, generate_population, truth_csv
from .tokens import RuleTable, dump_to_string

log = logging.getLogger("deathlink")

EXIT_OK, EXIT_FATAL, EXIT_ROW_ERRORS = 0, 1, 2


@dataclass
class Source:
    label: str
    path: Path
    layout: SourceLayout

    def describe(self) -> dict:
        return {"path": str(self.path), "layout": self.layout.to_dict()}


@dataclass
class RunConfig:
    patient: Optional[Source] = None
    external: Optional[Source] = None
    validity: ValidityConfig = field(default_factory=ValidityConfig)
    rules: RuleTable = field(default_factory=RuleTable)
    rules_path: Optional[str] = None
    thresholds: Thresholds = field(default_factory=Thresholds)
    validation_mode: str = SINGLE_RECORD
    dod_tolerance_days: int = 0
    token_priority: Optional[list] = None
    token_categories: Optional[dict] = None
    output_dir: Path = Path("out")
    threads: int = 1
    max_row_error_fraction: float = 0.0
    exact_distinct: bool = True
    percent_digits: int = 4
    strict_paper: bool = False

    @classmethod
    def load(cls, path, strict_paper: bool = False, output_dir=None, threads=None) -> "RunConfig":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(data, base=path.parent, strict_paper=strict_paper,
                             output_dir=output_dir, threads=threads)

    @classmethod
    def from_dict(cls, data: dict, base: Path = Path("."), strict_paper: bool = False,
                  output_dir=None, threads=None) -> "RunConfig":
        data = dict(data)
        known = {"patient", "external", "validity", "rules", "thresholds", "validation_mode",
                 "dod_tolerance_days", "token_priority", "token_categories", "output_dir",
                 "threads", "max_row_error_fraction", "exact_distinct", "percent_digits",
                 "strict_paper"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

        def resolve(p):
            p = Path(p)
            return p if p.is_absolute() else base / p

        def source(label):
            entry = data.get(label)
            if entry is None:
                return None
            if "path" not in entry:
                raise ConfigError(f"{label}: missing 'path'")
            layout = entry.get("layout")
            if isinstance(layout, str):
                layout = SourceLayout.load(resolve(layout))
            elif isinstance(layout, dict):
                layout = SourceLayout.from_dict(layout)
            else:
                layout = standard_layout()
            return Source(label, resolve(entry["path"]), layout)

        strict = strict_paper or bool(data.get("strict_paper", False))
        validity_opts = dict(data.get("validity", {}))
        if strict:
            validity_opts.update(min_year=1850, max_year=2022, check_month_day=False)
        rules_path = data.get("rules")
        rules = RuleTable.load(resolve(rules_path)) if rules_path else RuleTable()
        mode = data.get("validation_mode", SINGLE_RECORD)
        if mode not in VALIDATION_MODES:
            raise ConfigError(f"validation_mode must be one of {VALIDATION_MODES}")
        priority = data.get("token_priority")
        categories = data.get("token_categories")
        if categories is not None:
            categories = {int(k): Category(int(v)) for k, v in categories.items()}
        if priority is not None:
            priority = [int(t) for t in priority]
            unknown_ids = [t for t in priority if t not in rules.by_id]
            if unknown_ids:
                raise ConfigError(f"token_priority names unknown token ids {unknown_ids}")
        return cls(
            patient=source("patient"),
            external=source("external"),
            validity=ValidityConfig.from_dict(validity_opts),
            rules=rules,
            rules_path=str(resolve(rules_path)) if rules_path else None,
            thresholds=Thresholds(**data.get("thresholds", {})),
            validation_mode=mode,
            dod_tolerance_days=int(data.get("dod_tolerance_days", 0)),
            token_priority=priority,
            token_categories=categories,
            output_dir=Path(output_dir) if output_dir else resolve(data.get("output_dir", "out")),
            threads=int(threads if threads is not None else data.get("threads", 1)),
            max_row_error_fraction=float(data.get("max_row_error_fraction", 0.0)),
            exact_distinct=bool(data.get("exact_distinct", True)),
            percent_digits=int(data.get("percent_digits", 4)),
            strict_paper=strict,
        )

    def sources(self) -> list:
        return [s for s in (self.patient, self.external) if s is not None]

    def effective(self) -> dict:
        return {
            "patient": self.patient.describe() if self.patient else None,
            "external": self.external.describe() if self.external else None,
            "validity": self.validity.to_dict(),
            "rules": self.rules.to_json(),
            "rules_path": self.rules_path,
            "thresholds": {"upper": self.thresholds.upper, "lower": self.thresholds.lower},
            "validation_mode": self.validation_mode,
            "dod_tolerance_days": self.dod_tolerance_days,
            "token_priority": self.token_priority,
            "token_categories": ({str(k): int(v) for k, v in sorted(self.token_categories.items())}
                                 if self.token_categories else None),
            "output_dir": str(self.output_dir),
            "threads": self.threads,
            "max_row_error_fraction": self.max_row_error_fraction,
            "exact_distinct": self.exact_distinct,
            "percent_digits": self.percent_digits,
            "strict_paper": self.strict_paper,
        }


def fingerprint(path: Path) -> dict:
    h = hashlib.sha256()
    size = 0
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
            size += len(block)
    return {"path": str(path), "sha256": h.hexdigest(), "bytes": size}


def _as_bytes(content) -> bytes:
    return content.encode("utf-8") if isinstance(content, str) else content


def write_outputs(out_dir: Path, files: dict, summary: dict,
                  summary_name: str = "run_summary.json") -> None:
    """Write all outputs plus the run summary; files appear only once all are written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = dict(summary)
    summary["outputs"] = {name: hashlib.sha256(_as_bytes(c)).hexdigest()
                          for name, c in sorted(files.items())}
    files = dict(files)
    files[summary_name] = reports.to_json(summary)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out_dir))
    try:
        for name, content in files.items():
            (staging / name).write_bytes(_as_bytes(content))
        for name in files:
            os.replace(staging / name, out_dir / name)
    finally:
        shutil.rmtree(staging, ignore_errors=True)


def _check_inputs(cfg: RunConfig, need: tuple) -> None:
    for label in need:
        if getattr(cfg, label) is None:
            raise ConfigError(f"config has no '{label}' source")
    for src in cfg.sources():
        if not src.path.is_file():
            raise FileNotFoundError(f"input file not found: {src.path}")


def _load(cfg: RunConfig, src: Source):
    if src.label == "patient":
        src.layout.require("record_id")
    else:
        src.layout.require("ssn")
    parsed = read_source(src.path, src.layout)
    for err in parsed.errors[:20]:
        log.warning("%s line %d: %s", src.label, err.line, err.message)
    cleans, token_sets = prepare(parsed.records, cfg.validity, cfg.rules, cfg.threads,
                                 src.layout.date_order)
    return parsed, cleans, token_sets


def _row_error_exit(cfg: RunConfig, ingest: dict) -> int:
    read = sum(v["rows_read"] for v in ingest.values())
    rejected = sum(v["rows_rejected"] for v in ingest.values())
    if read and rejected / read > cfg.max_row_error_fraction:
        log.warning("%d of %d rows rejected (threshold %.4g)", rejected, read,
                    cfg.max_row_error_fraction)
        return EXIT_ROW_ERRORS
    return EXIT_OK


def _summary(command: str, cfg: RunConfig, ingest: dict, **extra) -> dict:
    return {
        "command": command,
        "config": cfg.effective(),
        "inputs": {s.label: fingerprint(s.path) for s in cfg.sources()},
        "ingest": ingest,
        **extra,
    }


def _clean_csv(cleans) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("record_id",) + IDENTITY_FIELDS + tuple(f"{f}_status" for f in IDENTITY_FIELDS))
    for rec in cleans:
        writer.writerow((rec.record_id,) + tuple(getattr(rec, f) or "" for f in IDENTITY_FIELDS)
                        + tuple(rec.status[f].value for f in IDENTITY_FIELDS))
    return buf.getvalue()


def cmd_normalize(cfg: RunConfig) -> int:
    _check_inputs(cfg, ())
    files, ingest, report = {}, {}, {}
    text = []
    for src in cfg.sources():
        parsed, cleans, _ = _load(cfg, src)
        ingest[src.label] = parsed.summary()
        prof = FieldProfiler(exact=cfg.exact_distinct)
        for raw, clean in zip(parsed.records, cleans):
            prof.add(raw, clean)
        profiles = prof.results()
        report[src.label] = {
            "ingest": parsed.summary(),
            "status": reports.status_tallies(cleans),
            "fields": reports.field_profile_rows(profiles),
        }
        files[f"{src.label}.clean.csv"] = _clean_csv(cleans)
        text.append(reports.field_profile_text(profiles, f"[{src.label}] {len(cleans)} records"))
    files["normalization_report.json"] = reports.to_json(report)
    files["normalization_report.txt"] = "\n".join(text)
    write_outputs(cfg.output_dir, files, _summary("normalize", cfg, ingest))
    return _row_error_exit(cfg, ingest)


def cmd_profile(cfg: RunConfig, dump_tokens: bool = False) -> int:
    _check_inputs(cfg, ())
    files, ingest, report = {}, {}, {}
    text = []
    for src in cfg.sources():
        parsed, cleans, token_sets = _load(cfg, src)
        ingest[src.label] = parsed.summary()
        fprof = FieldProfiler(exact=cfg.exact_distinct)
        for raw, clean in zip(parsed.records, cleans):
            fprof.add(raw, clean)
        tprof = TokenProfiler(cfg.rules.ids, exact=cfg.exact_distinct)
        for ts in token_sets:
            tprof.add(ts)
        breakdown = invalid_ssn_breakdown(parsed.records, cfg.validity)
        report[src.label] = {
            "total_records": len(cleans),
            "fields": reports.field_profile_rows(fprof.results()),
            "tokens": reports.token_profile_rows(tprof.results(), cfg.rules, cfg.percent_digits),
            "invalid_ssn": [{"pattern": p, "count": n} for p, n in breakdown],
        }
        text.append(reports.field_profile_text(fprof.results(), f"[{src.label}] fields, {len(cleans)} records"))
        text.append(reports.token_profile_text(tprof.results(), cfg.rules, cfg.percent_digits,
                                               f"[{src.label}] tokens"))
        text.append(reports.ssn_breakdown_text(breakdown, f"[{src.label}] invalid ssn"))
        if dump_tokens:
            files[f"{src.label}.tokens.csv"] = dump_to_string(token_sets)
    files["profile_report.json"] = reports.to_json(report)
    files["profile_report.txt"] = "\n".join(text)
    write_outputs(cfg.output_dir, files, _summary("profile", cfg, ingest))
    return _row_error_exit(cfg, ingest)


def run_link(cfg: RunConfig):
    """Full link pipeline; returns ``(files, ingest, extra_summary)`` without writing."""
    _check_inputs(cfg, ("patient", "external"))
    ingest, datasets = {}, {}
    for src in (cfg.patient, cfg.external):
        parsed, cleans, token_sets = _load(cfg, src)
        ingest[src.label] = parsed.summary()
        datasets[src.label] = TokenizedDataset(src.label, cleans, cfg.rules, token_sets)
    patients, external = datasets["patient"], datasets["external"]
    stats = validate_all(patients, external, cfg.validation_mode, cfg.dod_tolerance_days)
    ranked = rank_tokens(stats)
    categories = {s.token_id: categorize(s, cfg.thresholds) for s in stats if s.rate is not None}
    if cfg.token_priority is not None:
        ranked = list(cfg.token_priority)
    if cfg.token_categories is not None:
        categories = dict(cfg.token_categories)
    rows = link_deaths(patients, external, ranked, categories)

    vrows = reports.validation_rows(stats, rank_tokens(stats), cfg.rules, cfg.thresholds,
                                    cfg.percent_digits)
    title = f"validation subset: {len(patients.validation_subset())} patients with a death date"
    files = {
        "validation_report.json": reports.to_json({"validation_subset": len(patients.validation_subset()),
                                                   "tokens": vrows}),
        "validation_report.txt": reports.validation_text(vrows, title),
        "linked_deaths.csv": reports.linked_csv(rows),
    }
    linked = [r for r in rows if r.linked]
    by_token = {}
    for r in linked:
        by_token[str(r.token_id)] = by_token.get(str(r.token_id), 0) + 1
    extra = {
        "linkage": {
            "patients": len(rows),
            "linked": len(linked),
            "by_category": {str(int(c)): sum(1 for r in linked if r.category == c) for c in Category},
            "by_token": dict(sorted(by_token.items(), key=lambda kv: int(kv[0]))),
            "priority": ranked,
        }
    }
    return files, ingest, extra, rows


def cmd_link(cfg: RunConfig) -> int:
    files, ingest, extra, _ = run_link(cfg)
    write_outputs(cfg.output_dir, files, _summary("link", cfg, ingest, **extra))
    return _row_error_exit(cfg, ingest)


def cmd_synth(synth: SynthConfig, out_dir: Path) -> int:
    patients, external, truth = generate_population(synth)
    layout = standard_layout()
    run_config = {
        "patient": {"path": "patients.csv"},
        "external": {"path": "external.csv"},
        "output_dir": "out",
    }
    files = {
        "patients.csv": serialize_records(layout, patients),
        "external.csv": serialize_records(layout, external),
        "run_config.json": reports.to_json(run_config),
    }
    files["truth.csv"] = truth_csv(truth)
    summary = {
        "command": "synth",
        "config": synth.to_dict(),
        "counts": {"patients": len(patients), "external": len(external), "truth_pairs": len(truth.pairs)},
    }
    write_outputs(out_dir, files, summary)
    return EXIT_OK


def cmd_merge(existing: Path, update: Path, layout: SourceLayout, out: Path) -> int:
    layout.require("ssn")
    for p in (existing, update):
        if not Path(p).is_file():
            raise FileNotFoundError(f"input file not found: {p}")
    old = read_source(existing, layout)
    new = read_source(update, layout)
    merged = merge_monthly_update(old.records, new.records)
    out = Path(out)
    summary = {
        "command": "merge",
        "layout": layout.to_dict(),
        "inputs": {"existing": fingerprint(Path(existing)), "update": fingerprint(Path(update))},
        "ingest": {"existing": old.summary(), "update": new.summary()},
        "merged_records": len(merged.records),
        "rejected_records": [r.record_id for r in merged.rejected],
        "warnings": merged.warnings,
    }
    write_outputs(out.parent, {out.name: serialize_records(layout, merged.records)}, summary,
                  summary_name=f"{out.name}.summary.json")
    return EXIT_OK


def _parse_rates(pairs) -> dict:
    rates = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--error expects KIND[.FIELD]=RATE, got {item!r}")
        rates[key] = float(value)
    return rates


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deathlink", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_opts(p):
        p.add_argument("--config", required=True, help="run config (JSON)")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--threads", type=int, help="max worker processes")
        p.add_argument("--strict-paper", action="store_true",
                       help="years 1850-2022, no month/day range checks")

    run_opts(sub.add_parser("normalize", help="clean and validate source files"))
    p = sub.add_parser("profile", help="field and token completeness / distinctness")
    run_opts(p)
    p.add_argument("--dump-tokens", action="store_true", help="also write per-record token dumps")
    run_opts(sub.add_parser("link", help="validate tokens and link deaths"))

    p = sub.add_parser("synth", help="generate a synthetic dataset pair with truth map")
    p.add_argument("--config", help="synth config (JSON with SynthConfig fields)")
    p.add_argument("--n", type=int, default=1000, help="number of persons")
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dod-coverage", type=float, default=1.0)
    p.add_argument("--patient-dod-coverage", type=float, default=0.5)
    p.add_argument("--error", action="append", metavar="KIND[.FIELD]=RATE")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, help="accepted for symmetry; generation is sequential")

    p = sub.add_parser("merge", help="apply a monthly death-master update")
    p.add_argument("--existing", required=True)
    p.add_argument("--update", required=True)
    p.add_argument("--layout", help="layout JSON (default: standard delimited header)")
    p.add_argument("--out", required=True, help="merged output file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            if args.config:
                with open(args.config, encoding="utf-8") as fh:
                    synth = SynthConfig(**json.load(fh))
            else:
                synth = SynthConfig(args.n, args.overlap, args.seed, _parse_rates(args.error),
                                    args.dod_coverage, args.patient_dod_coverage)
            return cmd_synth(synth, Path(args.out))
        if args.command == "merge":
            layout = SourceLayout.load(args.layout) if args.layout else standard_layout()
            return cmd_merge(Path(args.existing), Path(args.update), layout, Path(args.out))
        cfg = RunConfig.load(args.config, strict_paper=args.strict_paper, output_dir=args.out,
                             threads=args.threads)
        if args.command == "normalize":
            return cmd_normalize(cfg)
        if args.command == "profile":
            return cmd_profile(cfg, args.dump_tokens)
        return cmd_link(cfg)
    except (ConfigError, IngestError, OSError, TypeError, ValueError) as exc:
        print(f"deathlink: error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
