import json
import os
from dataclasses import replace

import pytest

from vodcache.cachesim import ConfigError, SimConfig, run_simulation
from vodcache.expcli.analysis import analyze_model
from vodcache.expcli.cli import main, parse_int_list, parse_values
from vodcache.expcli.config import format_config, make_config, parse_config_text
from vodcache.expcli.figures import PRESETS, UnknownFigureError, build_manifest, replicate_figure, run_manifest
from vodcache.expcli.sweep import RUN_COLUMNS, SUMMARY_COLUMNS, SweepSpec, run_sweep

TINY = SimConfig(n=150, m=4, cache_size=20, horizon=800.0)


class TestConfig:
    def test_parse(self):
        text = "# model\nn = 300\nbeta=1.2  # steeper\n\ngraph_mode=directed\nhorizon=1e4\n"
        assert parse_config_text(text) == {"n": 300, "beta": 1.2, "graph_mode": "directed", "horizon": 1e4}

    @pytest.mark.parametrize("text", ["bogus=1", "n=abc", "n=2.5", "just a line"])
    def test_parse_errors(self, text):
        with pytest.raises(ConfigError):
            parse_config_text(text)

    def test_round_trip(self):
        cfg = replace(TINY, gamma=11.0, graph_mode="directed")
        assert make_config(**parse_config_text(format_config(cfg))) == cfg

    def test_overrides(self):
        assert make_config(TINY, gamma="63", seed=4) == replace(TINY, gamma=63.0, seed=4)

    def test_list_parsers(self):
        assert parse_int_list("0..3,7") == (0, 1, 2, 3, 7)
        assert parse_values("1,2.5,63") == (1, 2.5, 63)


class TestSweep:
    def spec(self, **kw):
        args = dict(base=TINY, axis="gamma", values=(1, 63), seeds=(0, 1), policies=("lru", "prefetch"),
                    r_search=(1, 2, 3))
        args.update(kw)
        return SweepSpec(**args)

    def test_row_count_and_order(self):
        res = run_sweep(self.spec())
        lines = res.runs_csv().splitlines()
        assert lines[0].split(",") == list(RUN_COLUMNS)
        assert len(lines) - 1 == 2 * 2 * (1 + 3)
        keys = [(r.value, r.seed, r.policy, r.r) for r in res.runs]
        assert keys == list(self.spec().points())

    def test_byte_identical_rerun(self):
        a, b = run_sweep(self.spec()), run_sweep(self.spec())
        assert a.runs_csv() == b.runs_csv() and a.summary_csv() == b.summary_csv()

    def test_parallel_matches_serial(self):
        spec = self.spec(values=(7,), r_search=(1, 2))
        assert run_sweep(spec, jobs=2).runs_csv() == run_sweep(spec).runs_csv()

    def test_gamma_sharing_matches_direct_runs(self):
        res = run_sweep(self.spec(values=(63,), seeds=(1,), r_search=(2,)))
        for rec in res.runs:
            direct = run_simulation(replace(TINY, gamma=63, seed=1, r=rec.r), rec.policy)
            assert rec.report.csv_row() == direct.csv_row()

    def test_summary_picks_argmin(self):
        res = run_sweep(self.spec())
        means = res.mean_costs()
        for row in res.summary():
            cands = {r: m["mean_cost"] for (v, p, r), m in means.items() if v == row["value"] and p == row["policy"]}
            assert row["mean_cost"] == min(cands.values())
        assert res.summary_csv().splitlines()[0].split(",") == list(SUMMARY_COLUMNS)
        assert set(res.optimal_r()) == {1, 63}

    def test_error_rows(self):
        res = run_sweep(self.spec(axis="cache_size", values=(1, 20), r_search=None))
        rows = [ln.split(",") for ln in res.runs_csv().splitlines()[1:]]
        status = [r[3] for r in rows]
        assert sum(s.startswith("error: ConfigError") for s in status) == 4
        assert status.count("ok") == 4
        assert all(len(r) == len(RUN_COLUMNS) for r in rows)

    def test_p_in_axis_moves_p_out(self):
        spec = self.spec(base=replace(TINY, graph_mode="directed"), axis="p_in", values=(0.3,), r_search=None)
        assert spec.config_for(0.3, 0, 1).p_out == 0.3

    @pytest.mark.parametrize("kw", [dict(axis="kappa"), dict(values=()), dict(policies=("fifo",)),
                                    dict(policies=("lru",))])
    def test_spec_validation(self, kw):
        with pytest.raises(ValueError):
            self.spec(**kw)

    def test_spec_dict_round_trip(self):
        spec = self.spec()
        assert SweepSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


class TestAnalysis:
    def test_default_model(self):
        res = analyze_model(SimConfig(n=2000, m=20))
        m = res.metrics
        assert m["row_sum_max_error"] <= 1e-12
        assert m["tail_steeper"] == 1 and m["distorted"] == 0
        assert m["bidirectional_fraction"] == 1.0
        assert m["path_length_estimated"] == 0
        assert res.warnings == []
        assert set(res.files()) == {"popularity.csv", "ctr.csv", "degrees.csv", "metrics.csv"}
        ctr = res.ctr_csv().splitlines()
        assert ctr[0] == "rank,median_ctr,cdf" and ctr[-1].endswith(",1")

    def test_distorted_directed_model_warns(self):
        res = analyze_model(SimConfig(n=2000, m=40, graph_mode="directed", p_in=0.2, p_out=0.2), small_world=False)
        assert any("power law" in w for w in res.warnings)
        assert "clustering_coefficient" not in res.metrics

    def test_directed_default_is_clean(self):
        res = analyze_model(SimConfig(n=2000, m=40, graph_mode="directed"), small_world=False)
        assert res.metrics["distorted"] == 0


class TestFigures:
    def test_unknown_id_lists_presets(self):
        with pytest.raises(UnknownFigureError, match="fig10"):
            build_manifest("fig99", (0,))

    def test_sweep_preset_and_manifest_rerun(self, tmp_path):
        out = tmp_path / "a"
        replicate_figure("fig12", (0,), str(out), horizon=300.0)
        summary = (out / "summary.csv").read_text().splitlines()
        assert summary[0].split(",")[:4] == ["axis", "value", "policy", "r"]
        assert len(summary) - 1 == 2 * len(PRESETS["fig12"].values)
        again = tmp_path / "b"
        run_manifest(str(out / "manifest.json"), str(again))
        for name in ("runs.csv", "summary.csv", "manifest.json"):
            assert (out / name).read_bytes() == (again / name).read_bytes()

    def test_bidirectional_preset(self, tmp_path):
        manifest = build_manifest("fig16", (0,))
        manifest["base"].update(n=300, m=5)
        run_manifest(manifest, str(tmp_path))
        lines = (tmp_path / "bidirectional.csv").read_text().splitlines()
        assert lines[0] == "p_in,p_out,seed,bidirectional_fraction"
        assert len(lines) == 1 + len(PRESETS["fig16"].values)

    def test_analysis_preset(self, tmp_path):
        manifest = build_manifest("fig4", (0, 1))
        manifest["base"].update(n=200, m=4)
        run_manifest(manifest, str(tmp_path))
        pop = (tmp_path / "popularity.csv").read_text().splitlines()
        assert pop[0] == "axis,value,seed,rank,popularity"
        assert len(pop) == 1 + 200 * 2 * len(PRESETS["fig4"].values)

    def test_every_preset_builds(self):
        for fid in PRESETS:
            m = build_manifest(fid, (0, 1))
            assert m["figure"] == fid and json.loads(json.dumps(m)) == m


class TestCli:
    def test_simulate_stdout(self, capsys):
        assert main(["simulate", "--n", "150", "--m", "4", "--cache-size", "20", "--horizon", "500",
                     "--policy", "prefetch", "--seeds", "0,1"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0].startswith("policy,graph_mode,n,")
        assert len(out) == 3 and all(ln.startswith("prefetch,ba,150,") for ln in out[1:])

    def test_config_file_and_flags(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n=150\nm=4\ncache_size=20\nhorizon=500\ngamma=11\n")
        assert main(["simulate", "--config", str(cfg), "--gamma", "63"]) == 0
        row = capsys.readouterr().out.splitlines()[1].split(",")
        assert row[7] == "63"

    def test_graph_dump_and_load(self, tmp_path, capsys):
        g = tmp_path / "g.txt"
        base = ["--n", "150", "--m", "4", "--cache-size", "20", "--horizon", "500"]
        assert main(["simulate", *base, "--dump-graph", str(g)]) == 0
        first = capsys.readouterr().out
        assert g.read_text().startswith("n=150 directed=true\n")
        assert main(["simulate", *base, "--load-graph", str(g)]) == 0
        assert capsys.readouterr().out == first

    def test_sweep_writes_files(self, tmp_path):
        out = tmp_path / "s"
        args = ["sweep", "--n", "150", "--m", "4", "--cache-size", "20", "--horizon", "300",
                "--axis", "gamma", "--values", "1,63", "--r-search", "1..2", "--out", str(out)]
        assert main(args) == 0
        assert sorted(os.listdir(out)) == ["manifest.json", "runs.csv", "summary.csv"]
        again = tmp_path / "t"
        assert main(["sweep", "--manifest", str(out / "manifest.json"), "--out", str(again)]) == 0
        assert (out / "runs.csv").read_bytes() == (again / "runs.csv").read_bytes()

    def test_analyze(self, tmp_path):
        assert main(["analyze", "--n", "200", "--m", "4", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "metrics.csv").read_text().startswith("metric,value\n")

    def test_figure_list(self, capsys):
        assert main(["figure", "list"]) == 0
        assert "fig10" in capsys.readouterr().out

    @pytest.mark.parametrize("argv", [
        ["figure", "fig99"],
        ["simulate", "--cache-size", "1"],
        ["sweep", "--n", "100"],
        ["simulate", "--config", "/nonexistent.cfg"],
    ])
    def test_errors_exit_2(self, argv, capsys):
        assert main(argv) == 2
        assert capsys.readouterr().err.startswith("error:")
