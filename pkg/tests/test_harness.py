"""Experiment harness: config validation, seed derivation, replicate records,
aggregation, serialization, emitters, and presets."""

import json
import math
from dataclasses import replace

import numpy as np
import pytest

from fdrbench import datagen
from fdrbench.attacks import AttackParams, HsjaParams
from fdrbench.datagen import RealDatasetSpec, SyntheticSpec, bundled_dataset_spec
from fdrbench.errors import InvalidInputError, UsageError
from fdrbench.harness import (
    DESK_SIZES,
    PAPER_SIZES,
    PRESETS,
    SEED_ROLES,
    Aggregates,
    ExperimentConfig,
    ExperimentReport,
    ReplicateRecord,
    bound_respected,
    config_from_dict,
    config_to_dict,
    derive_seed,
    emit_report,
    preset_config,
    report_from_json,
    run_experiment,
    with_paper_scale,
)
from fdrbench.learners import LearnerConfig, RandomForestHyper
from fdrbench.schemes import SizeRule

GAUSS5 = SyntheticSpec(family="independent_gaussian", d=5, shift=6.0)
MICRO = dict(n=150, m=20, k=120, m0=12)
TINY = LearnerConfig(hyper=RandomForestHyper(n_trees=50, max_depth=2, max_features=None))


def fast_attack(**overrides):
    base = dict(
        algorithm="hopskipjump",
        init_targets=np.zeros((1, 1)),
        max_queries=4_000,
        hsja=HsjaParams(iterations=6),
    )
    base.update(overrides)
    return AttackParams(**base)


def micro_cfg(**overrides):
    base = dict(data=GAUSS5, **MICRO, replicates=3, user=TINY, master_seed=5)
    base.update(overrides)
    return ExperimentConfig(**base)


def micro_oracle(**overrides):
    base = dict(scheme="oracle", size_rule=SizeRule.fixed(5), attack=fast_attack())
    base.update(overrides)
    return micro_cfg(**base)


# ------------------------------------------------------------------- config


@pytest.mark.parametrize(
    "field_name,value",
    [
        ("attacker", TINY),
        ("size_rule", SizeRule.fixed(3)),
        ("attack", fast_attack()),
        ("selection", "random_unrejected"),
    ],
)
def test_scheme_none_forbids_attack_fields(field_name, value):
    with pytest.raises(InvalidInputError, match="requires an attack scheme"):
        micro_cfg(**{field_name: value})


def test_attack_scheme_needs_rule_and_params():
    with pytest.raises(InvalidInputError, match="size_rule and attack"):
        micro_cfg(scheme="oracle", size_rule=SizeRule.fixed(3))
    with pytest.raises(InvalidInputError, match="size_rule and attack"):
        micro_cfg(scheme="surrogate", attack=fast_attack())


def test_oracle_scheme_size_constraints():
    with pytest.raises(InvalidInputError, match="fixed attack size"):
        micro_oracle(size_rule=SizeRule.intensity(0.5))
    # m0=12 test nulls: 13 targets cannot exist
    with pytest.raises(InvalidInputError, match="exceeds the 12 test nulls"):
        micro_oracle(size_rule=SizeRule.fixed(13))
    micro_oracle(size_rule=SizeRule.fixed(12))  # boundary value is fine


@pytest.mark.parametrize(
    "overrides,match",
    [
        (dict(scheme="martian"), "unknown scheme"),
        (dict(scheme="direct", size_rule=SizeRule.fixed(3), attack=fast_attack(),
              selection="weird"), "unknown selection rule"),
        (dict(alpha=0.0), "alpha"),
        (dict(alpha=1.0), "alpha"),
        (dict(replicates=0), "replicates"),
        (dict(master_seed=-1), "master_seed"),
        (dict(data=42), "unsupported data source"),
        (dict(k=150), "k"),  # needs k < n
    ],
)
def test_config_rejects_bad_values(overrides, match):
    with pytest.raises(InvalidInputError, match=match):
        micro_cfg(**overrides)


def test_config_rejects_callable_null_rule(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text("x,label\n1.0,ok\n2.0,bad\n")
    spec = RealDatasetSpec(path=path, label_column="label",
                           null_class_rule=lambda v: v == "ok")
    with pytest.raises(InvalidInputError, match="callable"):
        micro_cfg(data=spec)


# -------------------------------------------------------------------- seeds


def test_derive_seed_is_pure_and_distinct():
    assert derive_seed(7, 2, "data") == derive_seed(7, 2, "data")
    seen = {derive_seed(7, r, role) for r in range(5) for role in SEED_ROLES}
    assert len(seen) == 5 * len(SEED_ROLES)
    assert derive_seed(7, 0, "data") != derive_seed(8, 0, "data")


def test_derive_seed_rejects_bad_arguments():
    with pytest.raises(InvalidInputError, match="unknown seed role"):
        derive_seed(7, 0, "weather")
    with pytest.raises(InvalidInputError, match="non-negative"):
        derive_seed(-1, 0, "data")
    with pytest.raises(InvalidInputError, match="non-negative"):
        derive_seed(0, -1, "data")


# --------------------------------------------------------------------- runs


@pytest.fixture(scope="module")
def benign_report():
    return run_experiment(micro_cfg())


@pytest.fixture(scope="module")
def oracle_report():
    return run_experiment(micro_oracle())


def test_benign_run_layout(benign_report):
    report = benign_report
    assert len(report.records) == 3
    assert [rec.replicate for rec in report.records] == [0, 1, 2]
    for rec in report.records:
        assert not rec.failed
        assert rec.attack_size == 0 and rec.queries == 0
        assert rec.fdp == rec.benign_fdp and rec.power == rec.benign_power
    agg = report.aggregates
    assert agg.completed == 3
    assert agg.fdr_mean == agg.benign_fdr_mean
    assert agg.power_mean == agg.benign_power_mean
    assert report.estimated_upper_bound is None
    assert not report.partial
    assert bound_respected(report) is None


def test_benign_power_is_high_on_separated_data(benign_report):
    # shift=6 puts novelties far from the nulls: the detector should find them
    assert benign_report.aggregates.benign_power_mean >= 0.75


def test_oracle_attack_fields_populated(benign_report, oracle_report):
    report = oracle_report
    for rec in report.records:
        assert rec.attack_size == 5
        assert rec.queries > 0
    assert report.estimated_upper_bound is not None
    assert report.estimated_upper_bound > report.config.alpha
    # the attack makes things worse, never better, on average
    assert report.aggregates.fdr_mean >= benign_report.aggregates.fdr_mean
    assert bound_respected(report) in (True, False)


def test_oracle_with_empty_attack_matches_benign_run(benign_report):
    attacked = run_experiment(micro_oracle(size_rule=SizeRule.fixed(0)))
    for none_rec, zero_rec in zip(benign_report.records, attacked.records):
        assert zero_rec.fdp == none_rec.fdp
        assert zero_rec.power == none_rec.power
        assert zero_rec.rejections == none_rec.rejections
        assert zero_rec.benign_fdp == none_rec.benign_fdp
        assert zero_rec.attack_size == 0
    assert attacked.aggregates.fdr_mean == benign_report.aggregates.fdr_mean
    # an empty attack still reports its (trivial) bound: alpha + mean(0/R)
    assert attacked.estimated_upper_bound == pytest.approx(attacked.config.alpha)


def test_rerun_is_byte_identical():
    cfg = micro_oracle(replicates=1)
    first = emit_report(run_experiment(cfg))
    second = emit_report(run_experiment(cfg))
    assert first == second


def test_jobs_do_not_change_the_report(oracle_report):
    parallel = run_experiment(micro_oracle(), jobs=3)
    assert emit_report(parallel) == emit_report(oracle_report)


def test_jobs_must_be_positive():
    with pytest.raises(InvalidInputError, match="jobs"):
        run_experiment(micro_cfg(), jobs=0)


def test_master_seed_changes_results(benign_report):
    other = run_experiment(micro_cfg(master_seed=6))
    assert other.records != benign_report.records


def test_selection_override_runs_and_round_trips():
    report = run_experiment(micro_oracle(replicates=1, selection="boundary_nulls"))
    assert report.config.selection == "boundary_nulls"
    again = report_from_json(emit_report(report))
    assert again.config.selection == "boundary_nulls"


def test_direct_scheme_with_intensity_rule():
    report = run_experiment(
        micro_cfg(scheme="direct", size_rule=SizeRule.intensity(0.5),
                  attack=fast_attack(), replicates=2)
    )
    assert not report.partial
    assert report.estimated_upper_bound is not None
    for rec in report.records:
        assert 0 <= rec.attack_size <= report.config.m


# --------------------------------------------------------- failure handling


def test_failed_replicate_is_recorded_not_fatal(monkeypatch):
    cfg = micro_cfg()
    bad_seed = derive_seed(cfg.master_seed, 1, "data")
    real = datagen.generate_split

    def flaky(spec, n, m, k, m0, seed=None):
        if seed == bad_seed:
            raise RuntimeError("boom")
        return real(spec, n, m, k, m0, seed=seed)

    monkeypatch.setattr(datagen, "generate_split", flaky)
    report = run_experiment(cfg)
    assert report.partial
    assert [rec.failed for rec in report.records] == [False, True, False]
    failed = report.records[1]
    assert failed.error == "RuntimeError: boom"
    assert math.isnan(failed.fdp) and math.isnan(failed.benign_power)
    assert report.aggregates.completed == 2
    # aggregates ignore the failed replicate
    good = [rec.fdp for rec in report.records if not rec.failed]
    assert report.aggregates.fdr_mean == pytest.approx(np.mean(good))
    # the failure survives a serialization round trip
    again = report_from_json(emit_report(report))
    assert emit_report(again) == emit_report(report)
    assert "1 of 3 replicates failed" in emit_report(report, "markdown_table").decode()


def test_all_replicates_failed(monkeypatch):
    def always_broken(spec, n, m, k, m0, seed=None):
        raise RuntimeError("no data today")

    monkeypatch.setattr(datagen, "generate_split", always_broken)
    report = run_experiment(micro_oracle())
    assert report.partial
    assert report.aggregates.completed == 0
    assert math.isnan(report.aggregates.fdr_mean)
    assert report.estimated_upper_bound is None
    assert bound_respected(report) is None
    text = emit_report(report, "markdown_table").decode()
    assert "n/a" in text and "3 of 3 replicates failed" in text


# ------------------------------------------------------------- self-checks


def test_report_rejects_tampered_aggregates(benign_report):
    good = benign_report
    with pytest.raises(InvalidInputError, match="aggregates"):
        ExperimentReport(
            config=good.config,
            records=good.records,
            aggregates=replace(good.aggregates, fdr_mean=good.aggregates.fdr_mean + 0.1),
            estimated_upper_bound=good.estimated_upper_bound,
            provenance=good.provenance,
            partial=good.partial,
        )


def test_report_rejects_tampered_records(benign_report, oracle_report):
    good = benign_report
    first = good.records[0]
    with pytest.raises(InvalidInputError, match="records for"):
        ExperimentReport(
            config=good.config, records=good.records[:2], aggregates=good.aggregates,
            estimated_upper_bound=None, provenance=good.provenance, partial=False,
        )
    shuffled = (good.records[1], replace(first, replicate=1), good.records[2])
    with pytest.raises(InvalidInputError, match="sorted by replicate"):
        ExperimentReport(
            config=good.config, records=shuffled, aggregates=good.aggregates,
            estimated_upper_bound=None, provenance=good.provenance, partial=False,
        )
    with pytest.raises(InvalidInputError, match="partial"):
        ExperimentReport(
            config=good.config, records=good.records, aggregates=good.aggregates,
            estimated_upper_bound=None, provenance=good.provenance, partial=True,
        )
    attacked = oracle_report
    with pytest.raises(InvalidInputError, match="estimated_upper_bound"):
        ExperimentReport(
            config=attacked.config, records=attacked.records,
            aggregates=attacked.aggregates,
            estimated_upper_bound=attacked.estimated_upper_bound + 0.5,
            provenance=attacked.provenance, partial=attacked.partial,
        )


def test_record_failed_property():
    rec = ReplicateRecord(
        replicate=0, fdp=0.1, power=0.9, rejections=5, attack_size=0, queries=0,
        benign_fdp=0.1, benign_power=0.9, benign_rejections=5,
    )
    assert not rec.failed
    assert replace(rec, error="ValueError: nope").failed


# ------------------------------------------------------------ serialization


def test_json_round_trip_is_lossless(oracle_report):
    blob = emit_report(oracle_report)
    again = report_from_json(blob)
    assert emit_report(again) == blob
    assert again.config == oracle_report.config
    assert again.records == oracle_report.records


def test_provenance_fields(oracle_report):
    prov = oracle_report.provenance
    assert len(prov.config_hash) == 16
    assert int(prov.config_hash, 16) >= 0
    assert prov.master_seed == oracle_report.config.master_seed
    assert prov.version


def test_config_dict_round_trip_for_each_data_kind(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text("x,y,label\n" + "\n".join(f"{i}.0,{i}.5,ok" for i in range(40)))
    real = ExperimentConfig(
        data=RealDatasetSpec(path=str(path), label_column="label",
                             null_class_rule=("ok",)),
        n=10, m=4, k=8, m0=4, replicates=2,
    )
    for cfg in (preset_config("exp1"), preset_config("exp2"), real):
        doc = config_to_dict(cfg)
        json.dumps(doc)  # must be a plain JSON document
        assert config_to_dict(config_from_dict(doc)) == doc


def test_config_from_dict_rejects_unknown_keys():
    doc = config_to_dict(micro_cfg())
    doc["bogus"] = 1
    with pytest.raises(UsageError, match="unknown config keys.*bogus"):
        config_from_dict(doc)


def test_config_from_dict_requires_data():
    with pytest.raises(UsageError, match="missing the 'data'"):
        config_from_dict({"alpha": 0.1})
    with pytest.raises(UsageError, match="JSON object"):
        config_from_dict([1, 2])


def test_config_from_dict_bundled_kind():
    cfg = config_from_dict(
        {"data": {"kind": "bundled", "name": "shuttle"}, "sizes": MICRO}
    )
    assert isinstance(cfg.data, RealDatasetSpec)
    assert cfg.data.label_column == "class"
    with pytest.raises(UsageError, match="unknown data kind"):
        config_from_dict({"data": {"kind": "imaginary"}})


def test_bundled_specs_serialize_by_name():
    doc = config_to_dict(preset_config("exp2"))
    assert doc["data"] == {
        "kind": "bundled", "name": "shuttle", "standardize": True, "seed": 0,
    }
    # a spec that merely resembles a bundled one still records its real path
    bundled = bundled_dataset_spec("shuttle")
    tweaked = replace(bundled, label_column="class", null_class_rule=("7",))
    doc = config_to_dict(micro_cfg(data=tweaked))
    assert doc["data"]["kind"] == "real"
    assert doc["data"]["path"] == bundled.path


def test_config_defaults_fill_in():
    cfg = config_from_dict({"data": {"kind": "synthetic", "family": "independent_gaussian"}})
    assert (cfg.n, cfg.m, cfg.k, cfg.m0) == tuple(DESK_SIZES.values())
    assert cfg.alpha == 0.1 and cfg.replicates == 20 and cfg.scheme == "none"


# ----------------------------------------------------------------- emitters


def test_csv_layout(oracle_report):
    text = emit_report(oracle_report, "csv").decode()
    lines = text.strip().split("\n")
    assert len(lines) == oracle_report.config.replicates + 1
    assert lines[0].startswith("replicate,fdp,power,")
    first = lines[1].split(",")
    assert first[0] == "0"
    assert float(first[1]) == oracle_report.records[0].fdp


def test_markdown_rows(benign_report, oracle_report):
    benign = emit_report(benign_report, "markdown_table").decode()
    assert "| original |" in benign
    assert "estimated upper bound" not in benign
    attacked = emit_report(oracle_report, "markdown_table").decode()
    assert "| original |" in attacked
    assert "| oracle + attack |" in attacked
    assert "| estimated upper bound |" in attacked


def test_emit_report_rejects_unknown_format(benign_report):
    with pytest.raises(UsageError, match="unknown report format"):
        emit_report(benign_report, "yaml")


# ------------------------------------------------------------------ presets


@pytest.mark.parametrize("name", PRESETS)
def test_presets_build_valid_configs(name):
    cfg = preset_config(name)
    assert cfg.scheme in ("oracle", "surrogate", "direct")
    assert (cfg.n, cfg.m, cfg.k, cfg.m0) == tuple(DESK_SIZES.values())
    json.dumps(config_to_dict(cfg))


def test_unknown_preset():
    with pytest.raises(UsageError, match="unknown preset"):
        preset_config("exp99")


def test_with_paper_scale_scales_sizes_and_fixed_rule():
    cfg = preset_config("exp1")
    assert cfg.size_rule.m_a == 40
    scaled = with_paper_scale(cfg)
    assert (scaled.n, scaled.m, scaled.k, scaled.m0) == tuple(PAPER_SIZES.values())
    assert scaled.size_rule.m_a == 200  # 40 * (1000 / 200)
    assert scaled.master_seed == cfg.master_seed


def test_with_paper_scale_keeps_intensity_rule():
    cfg = preset_config("expA2")
    scaled = with_paper_scale(cfg)
    assert scaled.size_rule == cfg.size_rule
    assert scaled.m == PAPER_SIZES["m"]
