import math
import unittest

from src.umbilic_flow.flow_exception import ConfigError
from src.umbilic_flow.harness_config import HarnessConfig, CONFIG_KEYS, parse_config, serialize_config
from src.umbilic_flow.presets import make_preset

class TestParseConfig(unittest.TestCase):

    def test_minimal(self):
        config = parse_config('preset = round_cap\n')

        self.assertEqual(config, HarnessConfig(preset='round_cap'))
        self.assertDictEqual(config.preset_params(), {})
        self.assertEqual(config.flow_config().n_cells, 256)
        self.assertTupleEqual(config.n_list, (64, 128, 256))

    def test_comments_and_blank_lines(self):
        text = '# smaller cap\n\npreset = round_cap   # cap\ns_max = pi/3\n  \n'
        config = parse_config(text)

        self.assertEqual(config.s_max, math.pi / 3)
        self.assertAlmostEqual(make_preset(config.preset, config.preset_params(), n_cells=32).kappa,
                               1.0 / math.sqrt(3.0), places=12)

    def test_values(self):
        text = '\n'.join([
            'preset = perturbed_cap',
            'amp = 0.1',
            'n_cells = 128',
            'cfl = 0.2',
            't_end = 0.05',
            'thetas = 0.2, 0.1',
            'monitor_gradient = off',
            'n_list = 32,64,128',
            'delta = none'
        ])
        config = parse_config(text)

        self.assertDictEqual(config.preset_params(), {'amp': 0.1})
        self.assertEqual(config.n_cells, 128)
        self.assertEqual(config.flow_config().cfl_factor, 0.2)
        self.assertEqual(config.t_end, 0.05)
        self.assertTupleEqual(config.thetas, (0.2, 0.1))
        self.assertFalse(config.monitor_gradient)
        self.assertTupleEqual(config.n_list, (32, 64, 128))
        self.assertIsNone(config.delta)

    def test_missing_preset(self):
        with self.assertRaises(ConfigError) as cm:
            parse_config('n_cells = 64\n')
        self.assertEqual(cm.exception.key, 'preset')

    def test_unknown_preset(self):
        with self.assertRaises(ConfigError) as cm:
            parse_config('preset = torus\n')
        self.assertEqual(cm.exception.line, 1)
        self.assertEqual(cm.exception.key, 'preset')

    def test_cfl_out_of_range(self):
        with self.assertRaises(ConfigError) as cm:
            parse_config('preset = round_cap\ncfl = 0.9\n')
        self.assertEqual(cm.exception.line, 2)
        self.assertEqual(cm.exception.key, 'cfl')
        self.assertTrue(str(cm.exception).startswith('line 2: key "cfl"'))

    def test_unknown_key(self):
        with self.assertRaises(ConfigError) as cm:
            parse_config('preset = round_cap\n\nradius = 2\n')
        self.assertEqual(cm.exception.line, 3)
        self.assertEqual(cm.exception.key, 'radius')

    def test_repeated_key(self):
        with self.assertRaises(ConfigError) as cm:
            parse_config('preset = round_cap\nn_cells = 64\nn_cells = 128\n')
        self.assertEqual(cm.exception.line, 3)

    def test_missing_equals(self):
        with self.assertRaises(ConfigError) as cm:
            parse_config('preset round_cap\n')
        self.assertEqual(cm.exception.line, 1)
        self.assertIsNone(cm.exception.key)

    def test_unparsable_value(self):
        with self.assertRaises(ConfigError) as cm:
            parse_config('preset = round_cap\nn_cells = many\n')
        self.assertEqual(cm.exception.key, 'n_cells')

    def test_parameter_not_taken(self):
        with self.assertRaises(ConfigError) as cm:
            parse_config('preset = round_cap\nbeta = 1.0\n')
        self.assertEqual(cm.exception.key, 'beta')

    def test_ranges(self):
        for text in ('delta = 0.6', 'epsilon = 0.5', 'thetas = 0.1, 1.5', 'record_every = 0', 't_end = -1',
                     'n_list = 128,64'):
            with self.assertRaises(ConfigError):
                parse_config('preset = round_cap\n' + text + '\n')

class TestSerializeConfig(unittest.TestCase):

    def test_every_key(self):
        text = serialize_config(HarnessConfig(preset='flat_cap'))
        keys = [line.split('=')[0].strip() for line in text.splitlines()]

        self.assertListEqual(keys, list(CONFIG_KEYS))

    def test_round_trip(self):
        config = HarnessConfig(preset='flattened_cap', beta=1.0 / 3.0, n_cells=64, cfl=0.3, t_end=0.1,
                               delta=0.05, epsilon=0.2, thetas=(0.3, 0.01), monitor_pinching=False,
                               output_dir='runs/a', emit_plots=False, study_time=0.07, n_list=(16, 32, 64))

        self.assertEqual(parse_config(serialize_config(config)), config)
