import csv
import json
import math
import tempfile
from datetime import timedelta
from io import StringIO
from pathlib import Path

import factory
import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings
from django.utils import timezone

from .models import VerificationRun
from .utils import (
    RunConfigError,
    RunProcessor,
    build_report,
    load_config,
    meta_path,
    render_report,
    to_jsonable,
    write_report,
    write_table,
)


class VerificationRunFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = VerificationRun

    command = VerificationRun.Command.ENUMERATE
    seed = factory.Sequence(lambda n: n)
    tolerance = 1e-8
    config = factory.LazyFunction(lambda: {"measure": {"N": 2, "k": 1, "M": 2}})


class RunConfigTest(SimpleTestCase):
    """Tests for config parsing and validation."""

    def test_defaults(self):
        """Test that a command without a file takes section defaults."""
        config = load_config("enumerate", overrides={"seed": 4})
        self.assertEqual(config.seed, 4)
        self.assertEqual(config.section("measure")["N"], 2)
        self.assertEqual(config.format, "json")

    def test_unknown_key(self):
        """Test that an unknown key names its section and key."""
        with self.assertRaises(RunConfigError) as ctx:
            load_config("enumerate", text="[measure]\nN = 2\nbogus = 1\n")
        self.assertIn("[measure] bogus", str(ctx.exception))

    def test_unknown_section(self):
        """Test that an unknown section is rejected."""
        with self.assertRaises(RunConfigError):
            load_config("enumerate", text="[plots]\nwidth = 3\n")

    def test_unused_section(self):
        """Test that a section the command does not read is rejected."""
        with self.assertRaises(RunConfigError) as ctx:
            load_config("enumerate", text="[jack]\nN = 2\n")
        self.assertIn("not used by enumerate", str(ctx.exception))

    def test_k_above_n(self):
        """Test that k > N is a validation error."""
        with self.assertRaises(RunConfigError) as ctx:
            load_config("enumerate", text="[measure]\nN = 2\nk = 3\n")
        self.assertIn("[measure] k", str(ctx.exception))

    def test_geometric_needs_bases(self):
        """Test that geometric weights need one base per level."""
        with self.assertRaises(RunConfigError):
            load_config("measure", text="[measure]\nN = 3\nweight = geometric\nqs = 0.5, 0.6\n")
        config = load_config("measure", text="[measure]\nN = 3\nweight = geometric\nqs = 0.5, 0.6, 0.7\n")
        self.assertEqual(config.section("measure")["qs"], [0.5, 0.6, 0.7])

    def test_comma_lists(self):
        """Test that comma-separated values become lists."""
        config = load_config("verify-jack", text="[jack]\nthetas = 0.5, 2 # two values\ncauchy_N = 1\n")
        self.assertEqual(config.section("jack")["thetas"], [0.5, 2.0])
        self.assertEqual(config.section("jack")["cauchy_N"], [1])

    def test_cauchy_q_below_one(self):
        """Test that Cauchy bases must lie below one."""
        with self.assertRaises(RunConfigError):
            load_config("verify-jack", text="[jack]\ncauchy_q = 0.5, 1.0\n")

    def test_level_counts(self):
        """Test that level:count pairs parse and zero counts drop out."""
        config = load_config("verify-cumulants", text="[observables]\ncounts = 2:1, 1:0\n")
        self.assertEqual(config.section("observables")["counts"], {2: 1})
        with self.assertRaises(RunConfigError):
            load_config("verify-cumulants", text="[observables]\ncounts = 2-1\n")

    def test_flags_override_run_section(self):
        """Test that command-line values replace the [run] section."""
        config = load_config(
            "enumerate",
            text="[run]\nseed = 3\nthreads = 2\n",
            overrides={"seed": 9, "threads": None, "format": "csv"},
        )
        self.assertEqual(config.seed, 9)
        self.assertEqual(config.threads, 2)
        self.assertEqual(config.format, "csv")

    def test_missing_seed_is_drawn(self):
        """Test that a missing seed is replaced by a recorded 64-bit value."""
        config = load_config("enumerate")
        self.assertIsInstance(config.seed, int)
        self.assertTrue(0 <= config.seed < 2 ** 64)

    def test_unparseable_text(self):
        """Test that malformed files raise RunConfigError."""
        with self.assertRaises(RunConfigError):
            load_config("enumerate", text="N = 2\n")

    def test_report_path(self):
        """Test the report path for directories, .json files and the default."""
        config = load_config("measure", overrides={"seed": 1, "out": "reports/a"})
        self.assertEqual(config.report_path, Path("reports/a/measure.json"))
        self.assertEqual(config.artifact_path(".csv"), Path("reports/a/measure.csv"))
        config = load_config("measure", overrides={"seed": 1, "out": "reports/b.json"})
        self.assertEqual(config.report_path, Path("reports/b.json"))
        with override_settings(CORNERS_LAB_REPORT_DIR=Path("/tmp/lab")):
            config = load_config("measure", overrides={"seed": 1})
            self.assertEqual(config.report_path, Path("/tmp/lab/measure.json"))

    def test_parameters_exclude_run_section(self):
        """Test that thread counts and output paths stay out of the parameters."""
        config = load_config("enumerate", overrides={"seed": 2, "threads": 7, "out": "x"})
        parameters = config.parameters()
        self.assertEqual(parameters["seed"], 2)
        self.assertNotIn("run", parameters["sections"])
        self.assertNotIn("7", json.dumps(to_jsonable(parameters["sections"])))


class ReportTest(SimpleTestCase):
    """Tests for the JSON and CSV writers."""

    def test_jsonable_values(self):
        """Test complex, tuple-key, numpy and non-finite conversions."""
        value = {
            (2, 1): complex(1.5, -2.0),
            "array": np.array([1.0, 2.0]),
            "scalar": np.float64(0.25),
            "inf": math.inf,
            "pair": (1, 2),
        }
        self.assertEqual(
            to_jsonable(value),
            {"2|1": [1.5, -2.0], "array": [1.0, 2.0], "scalar": 0.25, "inf": "inf", "pair": [1, 2]},
        )

    def test_report_layout(self):
        """Test the report envelope and its sorted rendering."""
        document = build_report("enumerate", True, {"seed": 1}, {"z": 1, "a": complex(0, 1)})
        self.assertEqual(document["schema"], 1)
        self.assertEqual(document["results"]["a"], [0.0, 1.0])
        text = render_report(document)
        self.assertTrue(text.endswith("\n"))
        self.assertLess(text.index('"a"'), text.index('"z"'))
        self.assertLess(text.index('"command"'), text.index('"parameters"'))

    def test_meta_sidecar(self):
        """Test that run metadata goes to the sidecar, not the report."""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "out" / "measure.json"
            document = build_report("measure", True, {}, {})
            write_report(path, document, meta={"run_id": "abc", "threads": 4})
            self.assertEqual(json.loads(path.read_text()), document)
            sidecar = json.loads(meta_path(path).read_text())
            self.assertEqual(sidecar["run_id"], "abc")
            self.assertIn("python_version", sidecar)
            self.assertEqual(meta_path(path).name, "measure.meta.json")

    def test_write_table(self):
        """Test CSV output with list cells encoded as JSON."""
        with tempfile.TemporaryDirectory() as tmp:
            path = write_table(
                Path(tmp) / "t.csv",
                ["pattern", "value"],
                [{"pattern": "1|0", "value": complex(1, 2)}, {"pattern": "2|1", "value": 0.5}],
            )
            with path.open() as handle:
                rows = list(csv.DictReader(handle))
        self.assertEqual(rows[0]["value"], "[1.0, 2.0]")
        self.assertEqual(rows[1], {"pattern": "2|1", "value": "0.5"})


class VerificationRunModelTest(TestCase):
    """Tests for the VerificationRun model."""

    def test_defaults(self):
        """Test a freshly created run."""
        run = VerificationRunFactory()
        self.assertEqual(run.status, VerificationRun.Status.PENDING)
        self.assertIsNone(run.passed)
        self.assertEqual(run.threads, 1)
        self.assertIn("enumerate", str(run))

    def test_str_shows_verdict(self):
        """Test that completed runs show passed or failed."""
        run = VerificationRunFactory(status=VerificationRun.Status.COMPLETED, passed=False)
        self.assertEqual(str(run), "enumerate (failed)")
        run.passed = True
        self.assertEqual(str(run), "enumerate (passed)")

    def test_ordering(self):
        """Test that newest runs come first."""
        older = VerificationRunFactory()
        newer = VerificationRunFactory(command=VerificationRun.Command.MEASURE)
        VerificationRun.objects.filter(pk=older.pk).update(created_at=timezone.now() - timedelta(hours=1))
        self.assertEqual(list(VerificationRun.objects.all()), [newer, older])


class RunProcessorTest(TestCase):
    """Tests for the run processor."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_completed_run(self):
        """Test that a passing command stores its results."""
        config = load_config(
            "enumerate", text="[measure]\nN = 2\nM = 2\n", overrides={"seed": 1, "out": str(self.out)}
        )
        run = VerificationRunFactory(seed=1)
        outcome = RunProcessor().process(run, config)
        run.refresh_from_db()
        self.assertEqual(outcome.exit_code, 0)
        self.assertEqual(run.status, VerificationRun.Status.COMPLETED)
        self.assertTrue(run.passed)
        self.assertEqual(run.report["count"], 10)
        self.assertIsNotNone(run.completed_at)
        self.assertTrue(Path(run.report_path).exists())

    def test_contract_error(self):
        """Test that a mismatched family is a configuration failure."""
        config = load_config(
            "verify-bijection",
            text="[measure]\nweight = uniform\n[family]\nkind = krawtchouk\n",
            overrides={"seed": 1, "out": str(self.out)},
        )
        run = VerificationRunFactory(command=VerificationRun.Command.VERIFY_BIJECTION)
        outcome = RunProcessor().process(run, config)
        run.refresh_from_db()
        self.assertEqual(outcome.exit_code, 2)
        self.assertEqual(run.status, VerificationRun.Status.FAILED)
        self.assertIn("weight = krawtchouk", run.error_message)

    def test_unrecorded_run(self):
        """Test that record=False never touches the database."""
        config = load_config("enumerate", overrides={"seed": 1, "out": str(self.out)})
        run = VerificationRun(command=config.command, seed=1)
        outcome = RunProcessor(record=False).process(run, config)
        self.assertTrue(outcome.passed)
        self.assertEqual(VerificationRun.objects.count(), 0)


class CornersCommandTest(TestCase):
    """Tests for the corners management command."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write_config(self, name, text):
        path = self.out / name
        path.write_text(text)
        return str(path)

    def corners(self, *args, **options):
        stdout = StringIO()
        call_command("corners", *args, stdout=stdout, **options)
        return stdout.getvalue()

    def test_enumerate(self):
        """Test that N=2, k=1, M=2 has ten patterns and the run is recorded."""
        config = self.write_config("e.ini", "[measure]\nN = 2\nk = 1\nM = 2\n")
        output = self.corners("enumerate", config=config, seed=0, out=str(self.out))
        self.assertIn("passed", output)
        report = json.loads((self.out / "enumerate.json").read_text())
        self.assertTrue(report["passed"])
        self.assertEqual(report["results"]["count"], 10)
        self.assertEqual(report["results"]["closed_form"], 10)
        self.assertEqual(report["parameters"]["seed"], 0)
        run = VerificationRun.objects.get()
        self.assertEqual(run.status, VerificationRun.Status.COMPLETED)
        self.assertTrue(run.passed)

    def test_csv_table(self):
        """Test that --format csv writes the pattern table next to the report."""
        self.corners("enumerate", seed=0, out=str(self.out), format="csv")
        with (self.out / "enumerate.csv").open() as handle:
            rows = list(csv.DictReader(handle))
        self.assertEqual(len(rows), 10)
        self.assertEqual(set(rows[0]), {"index", "pattern"})

    def test_no_record(self):
        """Test that --no-record leaves the database empty."""
        self.corners("enumerate", seed=0, out=str(self.out), no_record=True)
        self.assertEqual(VerificationRun.objects.count(), 0)
        self.assertTrue((self.out / "enumerate.json").exists())

    def test_verify_jack(self):
        """Test a small Jack identity sweep passes."""
        config = self.write_config(
            "j.ini",
            "[jack]\nN = 2\nmax_part = 2\nthetas = 0.7, 1.0\ncauchy_N = 1\ncauchy_q = 0.1\ntruncation = 60\n",
        )
        self.corners("verify-jack", config=config, seed=0, out=str(self.out))
        report = json.loads((self.out / "verify-jack.json").read_text())
        self.assertTrue(report["passed"])

    def test_corrupted_family_fails(self):
        """Test that a corrupted Krawtchouk family exits with status 1."""
        config = self.write_config(
            "n.ini",
            "[measure]\ntheta = 1.0\nN = 2\nk = 1\nM = 3\nweight = krawtchouk\nq = 0.5\n"
            "[family]\ncorrupt = 1.01\nwhich = R1\n",
        )
        with self.assertRaises(CommandError) as ctx:
            self.corners("verify-nekrasov", config=config, seed=0, out=str(self.out))
        self.assertEqual(ctx.exception.returncode, 1)
        report = json.loads((self.out / "verify-nekrasov.json").read_text())
        self.assertFalse(report["passed"])
        run = VerificationRun.objects.get()
        self.assertEqual(run.status, VerificationRun.Status.COMPLETED)
        self.assertFalse(run.passed)
        self.assertTrue(run.error_message)

    def test_invalid_config(self):
        """Test that an unknown key exits with status 2 before any run is stored."""
        config = self.write_config("bad.ini", "[measure]\nN = 2\nbogus = 1\n")
        with self.assertRaises(CommandError) as ctx:
            self.corners("enumerate", config=config, out=str(self.out))
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn("bogus", str(ctx.exception))
        self.assertEqual(VerificationRun.objects.count(), 0)

    def test_missing_config_file(self):
        """Test that an unreadable config file exits with status 2."""
        with self.assertRaises(CommandError) as ctx:
            self.corners("enumerate", config=str(self.out / "missing.ini"))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_reports_are_reproducible(self):
        """Test that the same config and seed give byte-identical reports."""
        config = self.write_config(
            "m.ini",
            "[measure]\ntheta = 0.7\nN = 2\nM = 2\n[sampling]\nsamples = 400\nchains = 2\nburn_in = 20\n",
        )
        first, second = self.out / "first.json", self.out / "second.json"
        self.corners("measure", config=config, seed=11, threads=1, out=str(first))
        self.corners("measure", config=config, seed=11, threads=1, out=str(second))
        self.assertEqual(first.read_bytes(), second.read_bytes())
        self.assertTrue(meta_path(first).exists())
        report = json.loads(first.read_text())
        self.assertEqual(report["results"]["size"], 10)
        self.assertEqual(report["results"]["mcmc"]["samples"], 400)
