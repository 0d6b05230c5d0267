import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase, override_settings

from simulator.config import ConfigError, build_config, flatten_errors, load_config


class BuildConfigTests(SimpleTestCase):
    @override_settings(SINGLETSIM_OUT="/tmp/singletsim-env")
    def test_defaults(self):
        config = build_config()
        self.assertEqual(config.system.delta, 492.0)
        self.assertEqual(config.system.epsilon, 0.92)
        self.assertEqual((config.noise.t1, config.noise.t2), (1.7, 0.58))
        self.assertTrue(config.noise.enabled)
        self.assertEqual(config.acquisition.points, 16384)
        self.assertEqual(config.output_dir, Path("/tmp/singletsim-env"))

    def test_noise_times_follow_the_system(self):
        config = build_config({"system": {"t1": 2.0, "t2": 1.0}})
        self.assertEqual((config.noise.t1, config.noise.t2), (2.0, 1.0))
        config = build_config({"system": {"t1": 2.0, "t2": 1.0}, "noise": {"t2": 0.5}})
        self.assertEqual((config.noise.t1, config.noise.t2), (2.0, 0.5))

    def test_flags_override_file_values(self):
        data = {"system": {"epsilon": 0.5}, "noise": {"enabled": True}, "output_dir": "/tmp/from-file"}
        config = build_config(data, epsilon=0.8, no_noise=True, output_dir="/tmp/from-flag")
        self.assertEqual(config.system.epsilon, 0.8)
        self.assertFalse(config.noise.enabled)
        self.assertEqual(config.output_dir, Path("/tmp/from-flag"))
        self.assertEqual(build_config(data).output_dir, Path("/tmp/from-file"))

    def test_errors_name_the_offending_key(self):
        cases = {
            "system.t2": {"system": {"t1": 1.0, "t2": 2.5}},
            "system.epsilon": {"system": {"epsilon": 1.5}},
            "noise.t2": {"noise": {"t1": 0.2}},
            "noise.t1": {"noise": {"t1": 0}},
            "acquisition.points": {"acquisition": {"points": 3000}},
            "acquisition.spectral_width": {"acquisition": {"spectral_width": 300}},
            "system.gamma": {"system": {"gamma": 1}},
        }
        for key, data in cases.items():
            with self.subTest(key=key):
                with self.assertRaises(ConfigError) as ctx:
                    build_config(data)
                self.assertIn(key, ctx.exception.errors)
                self.assertIn(key, str(ctx.exception))

    def test_non_positive_noise_times_are_reported_per_key(self):
        with self.assertRaises(ConfigError) as ctx:
            build_config({"noise": {"t1": 0, "t2": -1.0}})
        self.assertEqual(set(ctx.exception.errors), {"noise.t1", "noise.t2"})

    def test_flatten_errors(self):
        errors = {"system": {"t2": ["too long."]}, "non_field_errors": ["broken."]}
        self.assertEqual(flatten_errors(errors), {"system.t2": "too long.", "non_field_errors": "broken."})


class LoadConfigTests(SimpleTestCase):
    def test_reads_json_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "config.json"
            path.write_text(json.dumps({"system": {"j": 5.0}, "acquisition": {"points": 8192}}), encoding="utf-8")
            config = load_config(path, output_dir=tmp)
        self.assertEqual(config.system.j, 5.0)
        self.assertEqual(config.acquisition.points, 8192)

    def test_rejects_malformed_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            for name, text in (("broken.json", "{not json"), ("list.json", "[1, 2]")):
                path = Path(tmp) / name
                path.write_text(text, encoding="utf-8")
                with self.subTest(name=name), self.assertRaises(ConfigError) as ctx:
                    load_config(path)
                self.assertIn("config", ctx.exception.errors)

    def test_missing_file_is_an_os_error(self):
        with self.assertRaises(OSError):
            load_config("/nonexistent/singletsim.json")
