"""Operator command line. Every workflow and analysis operation is reachable
here; ``--json`` emits the owning module's canonical serialization so output
is byte-identical for identical store state and arguments. ``--at`` injects
the wall clock for reproducible runs.

Exit codes: 0 success, 1 domain refusal (state or validation errors),
2 usage errors, 3 integrity/IO/lock errors.
"""

import argparse
import os
import sys
from pathlib import Path

from . import diffs, risk
from .errors import (
    IntegrityError,
    NotFoundError,
    ScrError,
    StoreLockError,
    WorkflowValidationError,
)
from .evaluator import check_rules, rule_from_json
from .grid import parse_workbook, serialize_workbook
from .jsonutil import canonical_json, load_json
from .metrics import AnalysisConfig, metrics_report, render_human
from .store import Store, validate_timestamp
from .workflow import (
    ChecklistInstance,
    ChecklistItemResult,
    ChecklistKind,
    Classification,
    Decision,
    ReviewRecord,
    SpreadsheetState,
    WorkflowEngine,
    instance_all_pass,
    machine_checks,
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2
EXIT_INTEGRITY = 3


def _read_workbook(path: str):
    return parse_workbook(Path(path).read_text(encoding="utf-8"))


def _read_rules(path: str) -> tuple:
    data = load_json(Path(path).read_text(encoding="utf-8"), source=path)
    if not isinstance(data, list):
        raise WorkflowValidationError(f"rules file {path} must hold a JSON list")
    return tuple(rule_from_json(obj) for obj in data)


def _store(args) -> Store:
    path = args.store or os.environ.get("SCR_STORE")
    if not path:
        raise WorkflowValidationError("no store given: pass --store or set SCR_STORE")
    return Store(path)


def _engine(args) -> WorkflowEngine:
    clock = None
    if args.at:
        fixed = validate_timestamp(args.at)
        clock = lambda: fixed  # noqa: E731 - tiny injected constant clock
    return WorkflowEngine(_store(args), clock=clock)


def _emit(args, obj, human: str | None = None) -> None:
    if args.json:
        sys.stdout.write(canonical_json(obj))
    elif human is not None:
        print(human)


def _load_profile(args, store: Store | None) -> risk.ThresholdProfile:
    if getattr(args, "profile", None):
        return risk.ThresholdProfile.from_json(
            load_json(Path(args.profile).read_text(encoding="utf-8"), source=args.profile)
        )
    if store is not None:
        stored = store.get_config("profile")
        if stored is not None:
            return risk.ThresholdProfile.from_json(stored)
    return risk.DEFAULT_PROFILE


def _load_policy(store: Store | None) -> risk.RecommendationPolicy:
    if store is not None:
        obj = store.get_config("policy")
        if obj:
            return risk.RecommendationPolicy(
                redevelop_count=int(obj.get("redevelop_count", 2)),
                restructure_floor=int(obj.get("restructure_floor", 2)),
            )
    return risk.RecommendationPolicy()


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_init(args) -> int:
    store = Store.init(args.store or os.environ.get("SCR_STORE") or args.path)
    _emit(args, {"store": str(store.root)}, f"initialized store at {store.root}")
    return EXIT_OK


def cmd_register(args) -> int:
    engine = _engine(args)
    workbook = _read_workbook(args.infile)
    rules = _read_rules(args.rules) if args.rules else ()
    with engine.store.lock():
        if args.redevelops:
            entry = engine.register_redevelopment(
                args.redevelops,
                workbook,
                args.name,
                owner=args.owner,
                classification=Classification(args.classification) if args.classification else None,
                rules=rules or None,
                actor=args.actor,
            )
        else:
            if not args.owner or not args.classification:
                raise WorkflowValidationError("register needs --owner and --classification")
            entry = engine.register(
                workbook,
                args.name,
                args.owner,
                Classification(args.classification),
                rules=rules,
                actor=args.actor,
            )
    _emit(args, entry.to_json(), f"{entry.id}: {entry.state.value}")
    return EXIT_OK


def cmd_promote(args) -> int:
    engine = _engine(args)
    with engine.store.lock():
        entry = engine.promote(args.entry, Classification(args.classification), args.actor)
    _emit(args, entry.to_json(), f"{entry.id}: {entry.state.value}")
    return EXIT_OK


def cmd_submit(args) -> int:
    engine = _engine(args)
    workbook = _read_workbook(args.infile)
    with engine.store.lock():
        cs = engine.submit_change(args.entry, workbook, args.author, args.description)
        entry = engine.get_entry(args.entry)
    _emit(
        args,
        cs.to_json(),
        f"change {cs.id[:12]} ({diffs.classify(cs)}), entry now {entry.state.value}",
    )
    return EXIT_OK


def cmd_diff(args) -> int:
    before = _read_workbook(args.before)
    after = _read_workbook(args.after)
    timestamp = validate_timestamp(args.at) if args.at else "1970-01-01T00:00:00Z"
    renames = tuple(tuple(pair.split(":", 1)) for pair in args.rename or ())
    cs = diffs.diff(
        before, after, args.author, timestamp, args.description, renames=renames
    )
    ranked = diffs.rank_by_risk(cs, before, after)
    if args.ranked:
        _emit(args, [r.to_json() for r in ranked])
    else:
        _emit(args, cs.to_json())
    if not args.json:
        print(f"{len(cs.deltas)} delta(s), {diffs.classify(cs)}")
        for r in ranked:
            d = r.delta
            print(
                f"  {d.address.qualified():<16} {d.kind.value:<20} score {r.score:g}  "
                f"{d.before.canonical or '∅'} -> {d.after.canonical or '∅'}"
            )
    return EXIT_OK


def cmd_analyze(args) -> int:
    workbook = _read_workbook(args.infile)
    config = AnalysisConfig(long_formula_threshold=args.long_formula_threshold)
    report = metrics_report(workbook, config)
    _emit(args, report.to_json(), render_human(report))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    if bool(args.entry) == bool(args.infile):
        raise WorkflowValidationError("evaluate needs exactly one of --entry or --in")
    if args.infile:
        workbook = _read_workbook(args.infile)
        profile = _load_profile(args, None)
        report = risk.evaluate_workbook(
            metrics_report(workbook), profile, _load_policy(None)
        )
        _emit(args, report.to_json(), _human_evaluation(report))
        return EXIT_OK
    engine = _engine(args)
    store = engine.store
    with store.lock():
        entry = engine.get_entry(args.entry)
        workbook = store.get_snapshot(engine.submitted_snapshot(entry))
        profile = _load_profile(args, store)
        report = risk.evaluate_workbook(metrics_report(workbook), profile, _load_policy(store))
        state = engine.record_evaluation(args.entry, report, args.actor)
    _emit(
        args,
        {"report": report.to_json(), "state": state.value},
        _human_evaluation(report) + f"\nentry now {state.value}",
    )
    return EXIT_OK


def _human_evaluation(report: risk.EvaluationReport) -> str:
    lines = [f"recommendation: {report.recommendation.value}"]
    lines += [f"  {metric:<30} {report.ratings[metric]}/5" for metric in risk.RATED_METRICS]
    if report.issues:
        lines.append(f"issues ({len(report.issues)}):")
        lines += [
            f"  [{i.metric}] {i.address or i.area}: {i.description}" for i in report.issues
        ]
    if report.areas_to_improve:
        lines.append("areas to improve: " + ", ".join(report.areas_to_improve))
    return "\n".join(lines)


def _load_checklist(path: str, kind: ChecklistKind) -> ChecklistInstance:
    data = load_json(Path(path).read_text(encoding="utf-8"), source=path)
    items = data["items"] if isinstance(data, dict) else data
    return ChecklistInstance(
        kind=kind,
        items=tuple(
            ChecklistItemResult(
                id=i["id"], status=i["status"], note=i.get("note", ""), machine=i.get("machine")
            )
            for i in items
        ),
    )


def cmd_review(args) -> int:
    engine = _engine(args)
    store = engine.store
    with store.lock():
        entry = engine.get_entry(args.entry)
        kind = (
            ChecklistKind.IN_DEPTH
            if entry.state is SpreadsheetState.IN_DEPTH_REVIEW_PENDING
            else ChecklistKind.CHANGE
        )
        template = engine.checklist_template(kind)
        machine = {}
        if not args.no_machine_checks:
            workbook = store.get_snapshot(engine.submitted_snapshot(entry))
            machine = machine_checks(workbook, entry.rules)
        if args.checklist:
            instance = _load_checklist(args.checklist, kind)
            if machine:
                instance = ChecklistInstance(
                    kind=kind,
                    items=tuple(
                        ChecklistItemResult(
                            id=i.id,
                            status=i.status,
                            note=i.note,
                            machine=machine.get(i.id, i.machine),
                        )
                        for i in instance.items
                    ),
                )
        else:
            instance = instance_all_pass(template, machine)
            if machine:
                # Machine findings drive the default statuses; a reviewer who
                # disagrees must say so in an explicit checklist file.
                instance = ChecklistInstance(
                    kind=kind,
                    items=tuple(
                        ChecklistItemResult(
                            id=i.id,
                            status=machine[i.id]["status"] if i.id in machine else i.status,
                            note=i.note,
                            machine=i.machine,
                        )
                        for i in instance.items
                    ),
                )
        review = ReviewRecord(
            entry=args.entry,
            reviewer=args.reviewer,
            decision=Decision(args.decision),
            checklist=instance,
            note=args.note or "",
        )
        state = engine.record_review(args.entry, review)
        entry = engine.get_entry(args.entry)
    recorded = entry.reviews[-1]
    _emit(
        args,
        {"state": state.value, "review": recorded},
        f"{args.entry}: {state.value}"
        + (f"\n\n{recorded['statement']}" if recorded["statement"] else ""),
    )
    return EXIT_OK


def cmd_statement(args) -> int:
    engine = _engine(args)
    entry = engine.get_entry(args.entry)
    reviews = list(entry.reviews)
    if args.review is not None:
        if not 0 <= args.review < len(reviews):
            raise NotFoundError(f"entry {args.entry!r} has no review #{args.review}")
        candidates = [reviews[args.review]]
    else:
        candidates = [r for r in reversed(reviews) if r.get("statement")]
    if not candidates or not candidates[0].get("statement"):
        raise NotFoundError(f"no approval statement on record for {args.entry!r}")
    statement = candidates[0]["statement"]
    if args.json:
        _emit(args, {"entry": args.entry, "statement": statement})
    else:
        sys.stdout.write(statement)
    return EXIT_OK


def cmd_replay(args) -> int:
    engine = _engine(args)
    store = engine.store
    events = engine.audit_log(args.entry)
    snapshots = [e for e in events if e.kind == "snapshot"]
    if not snapshots:
        raise NotFoundError(f"entry {args.entry!r} has no snapshot history")
    base = store.get_snapshot(snapshots[0].payload["snapshot"])
    change_ids = [e.payload["change"] for e in events if e.kind == "change-submitted"]
    log = [store.get_change(cid) for cid in change_ids]
    upto: int | str | None = None
    if args.upto is not None:
        upto = int(args.upto) if args.upto.isdigit() else validate_timestamp(args.upto)
    workbook = diffs.replay(base, log, upto)
    text = serialize_workbook(workbook)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    reports = [metrics_report(_read_workbook(path)) for path in args.corpus]
    percentiles = tuple(float(p) for p in args.percentiles.split(","))
    profile = risk.calibrate(reports, percentiles)
    text = canonical_json(profile.to_json())
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    if args.json or not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_rules_check(args) -> int:
    if bool(args.entry) == bool(args.infile):
        raise WorkflowValidationError("rules-check needs exactly one of --entry or --in")
    if args.entry:
        engine = _engine(args)
        entry = engine.get_entry(args.entry)
        workbook = engine.store.get_snapshot(engine.submitted_snapshot(entry))
        rules = entry.rules
    else:
        workbook = _read_workbook(args.infile)
        if not args.rules:
            raise WorkflowValidationError("rules-check --in needs --rules FILE")
        rules = _read_rules(args.rules)
    violations = check_rules(workbook, list(rules))
    _emit(
        args,
        [v.to_json() for v in violations],
        "\n".join(f"{v.rule_id}: {v.address.qualified()}: {v.message}" for v in violations)
        or "all rules hold",
    )
    return EXIT_OK


def cmd_export_archive(args) -> int:
    engine = _engine(args)
    with engine.store.lock():
        path = engine.store.export_archive(
            args.tag,
            entry_ids=args.entry or None,
            time_from=validate_timestamp(args.time_from) if args.time_from else None,
            time_to=validate_timestamp(args.time_to) if args.time_to else None,
            actor=args.actor,
            timestamp=validate_timestamp(args.at) if args.at else None,
        )
    _emit(args, {"archive": str(path)}, f"wrote {path}")
    return EXIT_OK


def cmd_inventory(args) -> int:
    engine = _engine(args)
    entries = engine.list_entries()
    _emit(
        args,
        [e.to_json() for e in entries],
        "\n".join(
            f"{e.id:<24} {e.classification.value:<12} {e.state.value:<26} {e.name}"
            for e in entries
        )
        or "inventory is empty",
    )
    return EXIT_OK


def cmd_audit(args) -> int:
    engine = _engine(args)
    events = engine.audit_log(args.entry, args.from_seq, args.to_seq)
    _emit(
        args,
        [e.to_json() for e in events],
        "\n".join(
            f"{e.sequence:>4}  {e.timestamp}  {e.kind:<16} {e.actor:<12} {e.payload}"
            for e in events
        )
        or "no events",
    )
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    host, _, port = args.bind.rpartition(":")
    app = create_app(_store(args), at=args.at)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--store", help="store directory (or env SCR_STORE)")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--at", help="fixed UTC timestamp, e.g. 2026-01-31T12:00:00Z")

    parser = argparse.ArgumentParser(prog="scr", description="Spreadsheet change reviews")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", parents=[common], help="create a store directory")
    p.add_argument("path", nargs="?", default=".", help="directory (defaults to --store)")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("register", parents=[common], help="add a workbook to the inventory")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--name", required=True)
    p.add_argument("--owner")
    p.add_argument("--classification", choices=[c.value for c in Classification])
    p.add_argument("--rules", help="expected-value rules file to attach")
    p.add_argument("--redevelops", help="retire this entry and register the replacement")
    p.add_argument("--actor")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("promote", parents=[common], help="move a recorded entry into review")
    p.add_argument("--entry", required=True)
    p.add_argument(
        "--classification",
        required=True,
        choices=[Classification.CRITICAL.value, Classification.OPERATIONAL.value],
    )
    p.add_argument("--actor", required=True)
    p.set_defaults(func=cmd_promote)

    p = sub.add_parser("submit", parents=[common], help="submit a changed workbook")
    p.add_argument("--entry", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--author", required=True)
    p.add_argument("--description", required=True)
    p.set_defaults(func=cmd_submit)

    p = sub.add_parser("diff", parents=[common], help="compare two workbook files")
    p.add_argument("--before", required=True)
    p.add_argument("--after", required=True)
    p.add_argument("--author", default="cli")
    p.add_argument("--description", default="")
    p.add_argument("--rename", action="append", metavar="OLD:NEW")
    p.add_argument("--ranked", action="store_true", help="emit risk-ranked deltas")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("analyze", parents=[common], help="compute the metric report")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--long-formula-threshold", type=int, default=15)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("evaluate", parents=[common], help="tool-assisted evaluation")
    p.add_argument("--entry")
    p.add_argument("--in", dest="infile")
    p.add_argument("--profile", help="threshold profile file")
    p.add_argument("--actor", default="evaluator")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("review", parents=[common], help="record a peer review")
    p.add_argument("--entry", required=True)
    p.add_argument("--reviewer", required=True)
    p.add_argument("--decision", required=True, choices=[d.value for d in Decision])
    p.add_argument("--checklist", help="checklist instance file")
    p.add_argument("--note")
    p.add_argument("--no-machine-checks", action="store_true")
    p.set_defaults(func=cmd_review)

    p = sub.add_parser("statement", parents=[common], help="print an approval statement")
    p.add_argument("--entry", required=True)
    p.add_argument("--review", type=int, help="review index (default: latest approval)")
    p.set_defaults(func=cmd_statement)

    p = sub.add_parser("replay", parents=[common], help="reconstruct a past workbook state")
    p.add_argument("--entry", required=True)
    p.add_argument("--upto", help="change count or UTC timestamp")
    p.add_argument("--out", help="write the document here instead of stdout")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("calibrate", parents=[common], help="fit rating bands to a corpus")
    p.add_argument("--corpus", nargs="+", required=True, metavar="WBK")
    p.add_argument("--out", help="write the profile here")
    p.add_argument("--percentiles", default="70,80,90,98")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("rules-check", parents=[common], help="check expected-value rules")
    p.add_argument("--entry")
    p.add_argument("--in", dest="infile")
    p.add_argument("--rules")
    p.set_defaults(func=cmd_rules_check)

    p = sub.add_parser("export-archive", parents=[common], help="write an archive bundle")
    p.add_argument("--tag", required=True)
    p.add_argument("--entry", action="append")
    p.add_argument("--from", dest="time_from")
    p.add_argument("--to", dest="time_to")
    p.add_argument("--actor", default="system")
    p.set_defaults(func=cmd_export_archive)

    p = sub.add_parser("inventory", parents=[common], help="list governed entries")
    p.set_defaults(func=cmd_inventory)

    p = sub.add_parser("audit", parents=[common], help="print an entry's audit trail")
    p.add_argument("--entry", required=True)
    p.add_argument("--from-seq", type=int)
    p.add_argument("--to-seq", type=int)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("serve", parents=[common], help="run the HTTP API")
    p.add_argument("--bind", default="127.0.0.1:8323")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (StoreLockError, IntegrityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except ScrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY


if __name__ == "__main__":
    sys.exit(main())
