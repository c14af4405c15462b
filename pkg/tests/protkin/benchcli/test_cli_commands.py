import io
import os
import tempfile
import unittest
from unittest import mock

import numpy as np

from protkin.benchcli.csvio import BENCH_COLUMNS
from protkin.benchcli.main import main
from protkin.structio.pdb import read_pdb

FORWARD_COUNT = 'protkin_pass_duration_seconds_count{op="backbone",phase="forward"}'


def run_cli(*argv: str) -> tuple[int, str, str]:
    with mock.patch("sys.stdout", new_callable=io.StringIO) as out, mock.patch(
        "sys.stderr", new_callable=io.StringIO
    ) as err:
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


def atom_lines(path: str) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line for line in f if line.startswith("ATOM  ")]


class TestFold(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def path(self, name: str) -> str:
        return os.path.join(self.tmp.name, name)

    def fold(self, *args: str, out: str = "x.pdb") -> tuple[int, str, str]:
        return run_cli("fold", *args, "--out", self.path(out))

    def test_threonine_full_atom(self):
        code, out, _ = self.fold("--seq", "T", "--random", "--model", "fullatom", out="t.pdb")
        self.assertEqual(code, 0)
        self.assertEqual(out, "7\n")
        self.assertEqual(len(atom_lines(self.path("t.pdb"))), 7)

    def test_random_backbone_is_reproducible(self):
        args = ["fold", "--seq-len", "3", "--random-seed", "7", "--random", "--model", "backbone"]
        self.assertEqual(run_cli(*args, "--out", self.path("a.pdb"))[0], 0)
        self.assertEqual(run_cli(*args, "--out", self.path("b.pdb"))[0], 0)
        self.assertEqual(len(atom_lines(self.path("a.pdb"))), 9)
        with open(self.path("a.pdb"), "rb") as a, open(self.path("b.pdb"), "rb") as b:
            self.assertEqual(a.read(), b.read())

    def test_angle_file(self):
        with open(self.path("in.ang"), "w", encoding="utf-8") as f:
            f.write("0 phi=-1.0 psi=-0.7\n1 phi=-1.2 psi=2.0\n")
        code, out, _ = self.fold(
            "--seq", "GG", "--angles", self.path("in.ang"), "--model", "backbone", out="g.pdb"
        )
        self.assertEqual(code, 0)
        self.assertEqual(out, "6\n")
        with open(self.path("g.pdb"), encoding="utf-8") as f:
            coords, _ = read_pdb(f.read())
        np.testing.assert_array_equal(coords.positions[0], [0.0, 0.0, 0.0])

    def test_angle_file_for_wrong_chi_slots(self):
        with open(self.path("in.ang"), "w", encoding="utf-8") as f:
            f.write("0 phi=-1.0 psi=-0.7\n")
        code, _, err = self.fold("--seq", "T", "--angles", self.path("in.ang"))
        self.assertEqual(code, 4)
        self.assertIn("chi", err)

    def test_unknown_residue(self):
        code, _, err = self.fold("--seq", "X", "--random", "--model", "backbone")
        self.assertEqual(code, 4)
        self.assertIn("'X'", err)

    def test_conflicting_flags(self):
        code, _, _ = run_cli("fold", "--seq", "G", "--seq-len", "3", "--random")
        self.assertEqual(code, 2)
        code, _, _ = run_cli("fold", "--seq", "G")
        self.assertEqual(code, 2)

    def test_missing_angle_file(self):
        code, _, _ = self.fold("--seq", "G", "--angles", self.path("absent.ang"))
        self.assertEqual(code, 3)

    def test_malformed_angle_file(self):
        with open(self.path("bad.ang"), "w", encoding="utf-8") as f:
            f.write("0 psi=0\n")
        code, _, err = self.fold("--seq", "G", "--angles", self.path("bad.ang"))
        self.assertEqual(code, 4)
        self.assertIn("missing phi", err)

    def test_omega_from_angle_file_in_both_models(self):
        with open(self.path("in.ang"), "w", encoding="utf-8") as f:
            f.write("0 phi=-1.0 psi=-0.7\n1 phi=-1.2 psi=2.1 omega=0.0\n")
        chains = {}
        for model in ("backbone", "fullatom"):
            code, _, _ = self.fold(
                "--seq", "GG", "--angles", self.path("in.ang"), "--model", model, out="m.pdb"
            )
            self.assertEqual(code, 0)
            with open(self.path("m.pdb"), encoding="utf-8") as f:
                coords, _ = read_pdb(f.read())
            keep = [i for i, name in enumerate(coords.atom_names) if name in ("N", "CA", "C")]
            chains[model] = np.asarray(coords.positions)[keep]
        self.assertEqual(chains["fullatom"].shape, (6, 3))
        np.testing.assert_allclose(chains["fullatom"], chains["backbone"], atol=2e-3)

    def test_angle_file_with_invalid_utf8(self):
        with open(self.path("bad.ang"), "wb") as f:
            f.write(b"0 phi=-1.0 psi=-0.7\n1 phi=\xff\xfe psi=0\n")
        for model in ("backbone", "fullatom"):
            code, _, err = self.fold(
                "--seq", "GG", "--angles", self.path("bad.ang"), "--model", model
            )
            self.assertEqual(code, 4, model)
            self.assertIn("line 2, column 7", err)


class TestRmsd(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.a = os.path.join(self.tmp.name, "a.pdb")
        self.b = os.path.join(self.tmp.name, "b.pdb")
        run_cli("fold", "--seq", "KWAT", "--random", "--random-seed", "1", "--out", self.a)
        run_cli("fold", "--seq", "KWAT", "--random", "--random-seed", "2", "--out", self.b)

    def test_same_file(self):
        code, out, _ = run_cli("rmsd", self.a, self.a)
        self.assertEqual(code, 0)
        self.assertEqual(out, "0.000000\n")

    def test_gradient_dump(self):
        grad = os.path.join(self.tmp.name, "grad.txt")
        code, out, _ = run_cli("rmsd", self.a, self.b, "--grad", grad, "--brute-force")
        self.assertEqual(code, 0)
        value, brute = out.splitlines()
        self.assertGreater(float(value), 0.0)
        self.assertAlmostEqual(float(brute.split("=")[1]), float(value), delta=1e-3)
        dump = np.loadtxt(grad)
        self.assertEqual(dump.shape, (len(atom_lines(self.a)), 3))
        self.assertLess(float(np.max(np.abs(dump.sum(axis=0)))), 1e-9)

    def test_superposed_output(self):
        moved = os.path.join(self.tmp.name, "moved.pdb")
        code, out, _ = run_cli("rmsd", self.a, self.b, "--superposed", moved)
        self.assertEqual(code, 0)
        with open(self.a, encoding="utf-8") as f:
            a, _ = read_pdb(f.read())
        with open(moved, encoding="utf-8") as f:
            m, records = read_pdb(f.read())
        with open(self.b, encoding="utf-8") as f:
            b, _ = read_pdb(f.read())
        self.assertEqual(m.atom_names, b.atom_names)
        self.assertEqual(records[0].residue_code, "LYS")
        plain = float(np.sqrt(np.mean(np.sum((a.positions - m.positions) ** 2, axis=1))))
        self.assertAlmostEqual(plain, float(out), delta=2e-3)

    def test_count_mismatch(self):
        c = os.path.join(self.tmp.name, "c.pdb")
        run_cli("fold", "--seq", "G", "--random", "--out", c)
        code, _, err = run_cli("rmsd", self.a, c)
        self.assertEqual(code, 4)
        self.assertIn("atom counts differ", err)

    def test_parse_failure(self):
        bad = os.path.join(self.tmp.name, "bad.pdb")
        with open(self.a, encoding="utf-8") as f:
            lines = f.read().splitlines()
        lines[0] = lines[0][:30] + "  xx.yyy" + lines[0][38:]
        with open(bad, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")
        code, _, err = run_cli("rmsd", bad, self.a)
        self.assertEqual(code, 4)
        self.assertIn("line 1", err)

    def test_invalid_utf8(self):
        bad = os.path.join(self.tmp.name, "bad.pdb")
        with open(bad, "wb") as f:
            f.write(b"ATOM  \xff\xfe\n")
        code, _, err = run_cli("rmsd", bad, bad)
        self.assertEqual(code, 4)
        self.assertIn("line 1, column 7", err)

    def test_missing_file(self):
        code, _, _ = run_cli("rmsd", self.a, os.path.join(self.tmp.name, "absent.pdb"))
        self.assertEqual(code, 3)


class TestGradcheck(unittest.TestCase):
    def test_backbone(self):
        code, out, _ = run_cli("gradcheck", "--model", "backbone", "--len", "5", "--trials", "3")
        self.assertEqual(code, 0)
        self.assertTrue(out.startswith("max_relative_error="))

    def test_fullatom(self):
        code, out, _ = run_cli("gradcheck", "--model", "fullatom", "--len", "3", "--trials", "2")
        self.assertEqual(code, 0)
        for loss in ("sum_squares", "lrmsd", "projection"):
            self.assertIn(f"max_relative_error[{loss}]=", out)

    def test_lrmsd(self):
        code, out, _ = run_cli("gradcheck", "--model", "lrmsd", "--len", "10", "--trials", "3")
        self.assertEqual(code, 0)
        self.assertIn("max_gradient_sum=", out)
        self.assertIn("max_rotation_derivative=", out)

    def test_zero_tolerance_fails(self):
        code, out, _ = run_cli(
            "gradcheck", "--model", "backbone", "--len", "4", "--trials", "2", "--tol", "0"
        )
        self.assertEqual(code, 1)
        self.assertIn("worst: seed=", out)

    def test_bad_options(self):
        self.assertEqual(run_cli("gradcheck", "--model", "backbone", "--len", "0")[0], 2)
        self.assertEqual(run_cli("gradcheck", "--model", "nope", "--len", "3")[0], 2)


class TestBench(unittest.TestCase):
    def test_rows_and_metrics(self):
        with tempfile.TemporaryDirectory() as tmp:
            csv = os.path.join(tmp, "bench.csv")
            metrics = os.path.join(tmp, "metrics.txt")
            code, out, _ = run_cli(
                "bench", "--op", "backbone", "--min-len", "2", "--max-len", "6", "--step", "2",
                "--batch", "2", "--reps", "2", "--csv", csv, "--metrics-out", metrics,
            )
            self.assertEqual(code, 0)
            self.assertIn("rows=12", out)
            with open(csv, encoding="utf-8") as f:
                lines = f.read().splitlines()
            self.assertEqual(lines[0], "# protkin bench v1")
            self.assertEqual(lines[1], ",".join(BENCH_COLUMNS))
            self.assertEqual(len(lines), 14)
            with open(metrics, encoding="utf-8") as f:
                text = f.read()
            self.assertIn(FORWARD_COUNT, text)

            code, out, _ = run_cli("fit", csv)
            self.assertEqual(code, 0)
            self.assertEqual(len(out.splitlines()), 2)

    def test_min_above_max(self):
        code, _, _ = run_cli("bench", "--op", "lrmsd", "--min-len", "5", "--max-len", "2")
        self.assertEqual(code, 2)

    def test_unknown_op(self):
        self.assertEqual(run_cli("bench", "--op", "nope")[0], 2)


class TestPrecision(unittest.TestCase):
    def test_small_run(self):
        with tempfile.TemporaryDirectory() as tmp:
            csv = os.path.join(tmp, "p.csv")
            code, out, _ = run_cli(
                "precision", "--max-len", "10", "--reps", "3", "--bins", "3", "--csv", csv
            )
            self.assertIn(code, (0, 1))
            self.assertIn("atom_index=30", out)
            with open(csv, encoding="utf-8") as f:
                lines = f.read().splitlines()
            self.assertEqual(lines[0], "# protkin precision v1")
            self.assertEqual(lines[1], "atom_index,mean_error,ci95_low,ci95_high")
            self.assertEqual(len(lines), 2 + 33)
            self.assertTrue(lines[2].startswith("0,0.0,0.0,0.0"))


class TestMain(unittest.TestCase):
    def test_version(self):
        code, out, _ = run_cli("--version")
        self.assertEqual(code, 0)
        self.assertTrue(out.strip())

    def test_no_command(self):
        self.assertEqual(run_cli()[0], 2)

    def test_empty_band(self):
        self.assertEqual(run_cli("fit", "whatever.csv", "--band", "2", "1")[0], 2)
