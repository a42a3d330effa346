"""Pipeline driver and the fcomp command-line interface."""

import pytest

from fcomp.cli import main
from fcomp.pipeline import (
    Stage, compile, compile_stages, emit_sexp, parse_stage_artifact,
    result_nat, run,
)
from fcomp.surface import parse_source


WORKED = "let f = fix f (x:nat):nat. x+2 in f 3"


class TestPipeline:
    def test_all_stages_present(self):
        stages = compile_stages(parse_source(WORKED))
        assert set(stages) == {
            Stage.SOURCE, Stage.CPS, Stage.CC, Stage.HOIST, Stage.CG
        }

    def test_stop_after(self):
        stages = compile_stages(parse_source(WORKED), Stage.CC)
        assert Stage.CC in stages and Stage.HOIST not in stages

    def test_every_stage_evaluates_to_five(self):
        stages = compile_stages(parse_source(WORKED))
        for artifact in stages.values():
            out, _ = run(artifact, 100_000)
            assert result_nat(out) == 5

    def test_cg_run_reports_heap_use(self):
        artifact = compile(parse_source(WORKED), Stage.CG)
        out, cells = run(artifact, 100_000)
        assert result_nat(out) == 5
        assert cells > 0

    def test_emit_and_reparse_each_stage(self):
        stages = compile_stages(parse_source(WORKED))
        for stage, artifact in stages.items():
            text = emit_sexp(artifact)
            back = parse_stage_artifact(stage, text)
            assert back.payload == artifact.payload

    def test_ill_typed_program_fails_at_cps(self):
        from fcomp.pipeline import StageError

        with pytest.raises(StageError) as ei:
            compile_stages(parse_source("1 + ()"))
        assert ei.value.stage is Stage.CPS


class TestCli:
    def _write(self, tmp_path, text):
        f = tmp_path / "prog.src"
        f.write_text(text + "\n")
        return str(f)

    def _run(self, argv):
        with pytest.raises(SystemExit) as ei:
            main(argv)
        return ei.value.code

    def test_check_prints_type(self, tmp_path, capsys):
        path = self._write(tmp_path, WORKED)
        assert self._run(["check", path]) == 0
        assert capsys.readouterr().out.strip() == "nat"

    def test_check_rejects_ill_typed(self, tmp_path, capsys):
        path = self._write(tmp_path, "1 + ()")
        assert self._run(["check", path]) == 1
        assert "error" in capsys.readouterr().err

    def test_missing_file_is_user_error(self, capsys):
        assert self._run(["check", "/nonexistent/prog.src"]) == 1

    @pytest.mark.parametrize("stage", ["cps", "cc", "hoist", "cg"])
    def test_compile_emits_parsable_sexp(self, tmp_path, capsys, stage):
        path = self._write(tmp_path, WORKED)
        assert self._run(["compile", path, "--stop-after", stage]) == 0
        text = capsys.readouterr().out
        parse_stage_artifact(Stage(stage), text)

    def test_compile_to_output_file(self, tmp_path):
        path = self._write(tmp_path, WORKED)
        out = tmp_path / "out.sexp"
        assert self._run(["compile", path, "-o", str(out)]) == 0
        parse_stage_artifact(Stage.CG, out.read_text())

    @pytest.mark.parametrize("stage", ["source", "cps", "cc", "hoist", "cg"])
    def test_run_prints_value(self, tmp_path, capsys, stage):
        path = self._write(tmp_path, WORKED)
        assert self._run(["run", path, "--stage", stage]) == 0
        out = capsys.readouterr().out
        assert out.startswith("Value")
        assert "5" in out.split("(steps")[0]

    def test_run_out_of_fuel_is_nonzero(self, tmp_path, capsys):
        path = self._write(tmp_path, "(fix f (x:nat):nat. f x) 0")
        assert self._run(["run", path, "--fuel", "50"]) == 1

    def test_trace_prints_numbered_steps(self, tmp_path, capsys):
        path = self._write(tmp_path, "pred (pred 2)")
        assert self._run(["trace", path, "--max-steps", "10"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("0:")
        assert lines[-1].endswith("0")  # final value

    def test_trace_cg_shows_heap_pointer(self, tmp_path, capsys):
        path = self._write(tmp_path, "fst (1, 2)")
        assert self._run(["trace", path, "--stage", "cg", "--max-steps", "50"]) == 0
        assert "[next_free=" in capsys.readouterr().out

    def test_fuzz_small_run_passes(self, tmp_path, capsys):
        assert self._run(["fuzz", "--count", "5", "--seed", "7",
                          "--max-size", "12", "--fuel", "2000"]) == 0
        out = capsys.readouterr().out
        assert "cases: 5" in out
        assert "failures: 0" in out

    def test_fuzz_env_seed_overrides_flag(self, capsys, monkeypatch):
        monkeypatch.setenv("FCOMP_SEED", "99")
        assert self._run(["fuzz", "--count", "2", "--seed", "1",
                          "--max-size", "10"]) == 0
        assert "seed: 99" in capsys.readouterr().out
