import json
from pathlib import Path

import pandas as pd
import pytest
import yaml

from config import ARCHIVOS_SALIDA, STEPS_COLUMNS, SWEEP_COLUMNS, THREADS_ENV
from curvadion.cli import main, matched_interval, placement_fraction


CONFIGS = Path(__file__).parent.parent / 'configs'


def _yaml(tmp_path, data, nombre='cfg.yaml'):
    path = tmp_path / nombre
    path.write_text(yaml.safe_dump(data), encoding='utf-8')
    return str(path)


QUADRATIC = {
    'problem': {'kind': 'quadratic', 'shape': [8, 6], 'noise_sigma': 0.01},
    'n_workers': 4,
    'steps': 30,
    'policy': {'kind': 'adaptive', 'tau': 0.3},
}

SWITCH = {
    'problem': {'kind': 'curvature_switch', 'shape': [4, 3], 'switch_steps': [40], 'noise_sigma': 0.01},
    'n_workers': 4,
    'steps': 60,
    'policy': {'kind': 'adaptive', 'tau': 0.3},
}


# ==============================================================================
# PRESUPUESTO IGUALADO
# ==============================================================================

@pytest.mark.parametrize("rate, steps, expected", [
    (0.01, 3000, 100), (0.1, 3000, 10), (0.0, 200, 200), (1.0, 50, 1), (0.4, 10, 3), (0.001, 200, 200),
])
def test_matched_interval(rate, steps, expected):
    assert matched_interval(rate, steps) == expected


def test_placement_fraction():
    assert placement_fraction([1, 41, 42, 60], [40], window=5) == pytest.approx(2 / 3)
    assert placement_fraction([1], [40], window=5) is None
    assert placement_fraction([41], [], window=5) is None


# ==============================================================================
# RUN
# ==============================================================================

def test_run_writes_outputs(tmp_path):
    out = tmp_path / 'run'
    assert main(['run', '--config', _yaml(tmp_path, QUADRATIC), '--out', str(out)]) == 0
    steps = pd.read_csv(out / ARCHIVOS_SALIDA['steps'])
    assert list(steps.columns) == STEPS_COLUMNS
    assert len(steps) == 30
    assert steps['synced'].iloc[0] == 1
    summary = json.loads((out / ARCHIVOS_SALIDA['summary']).read_text())
    assert summary['steps'] == 30
    assert summary['sync_count'] == int(steps['synced'].sum())
    assert summary['total_bytes']['fullgrad'] == int(steps['bytes_cum'].iloc[-1])


def test_run_is_byte_identical(tmp_path):
    cfg = _yaml(tmp_path, QUADRATIC)
    assert main(['run', '--config', cfg, '--out', str(tmp_path / 'a')]) == 0
    assert main(['run', '--config', cfg, '--out', str(tmp_path / 'b')]) == 0
    for nombre in (ARCHIVOS_SALIDA['steps'], ARCHIVOS_SALIDA['summary']):
        assert (tmp_path / 'a' / nombre).read_bytes() == (tmp_path / 'b' / nombre).read_bytes()


def test_parallel_run_matches_serial(tmp_path, monkeypatch):
    serial = _yaml(tmp_path, QUADRATIC, 'serial.yaml')
    paralelo = _yaml(tmp_path, {**QUADRATIC, 'parallel': True}, 'paralelo.yaml')
    monkeypatch.setenv(THREADS_ENV, '4')
    assert main(['run', '--config', serial, '--out', str(tmp_path / 's')]) == 0
    assert main(['run', '--config', paralelo, '--out', str(tmp_path / 'p')]) == 0
    nombre = ARCHIVOS_SALIDA['steps']
    assert (tmp_path / 's' / nombre).read_bytes() == (tmp_path / 'p' / nombre).read_bytes()


def test_seed_and_comm_overrides(tmp_path):
    out = tmp_path / 'run'
    args = ['run', '--config', _yaml(tmp_path, QUADRATIC), '--out', str(out), '--seed', '5', '--comm', 'lowrank']
    assert main(args) == 0
    summary = json.loads((out / ARCHIVOS_SALIDA['summary']).read_text())
    assert summary['seed'] == 5
    assert summary['comm_convention'] == 'lowrank'


@pytest.mark.parametrize("data", [
    {**QUADRATIC, 'steps': 0},
    {**QUADRATIC, 'policy': {'kind': 'adaptive', 'tau': -0.1}},
    {**QUADRATIC, 'desconocido': 1},
    {**QUADRATIC, 'dion': {'warmup_frac': 0.6, 'warmdown_frac': 0.6}},
])
def test_invalid_config_exits_1_without_output(tmp_path, data):
    out = tmp_path / 'run'
    assert main(['run', '--config', _yaml(tmp_path, data), '--out', str(out)]) == 1
    assert not out.exists()


def test_malformed_yaml_exits_1(tmp_path):
    path = tmp_path / 'roto.yaml'
    path.write_text("problem: [kind: quadratic\n", encoding='utf-8')
    assert main(['run', '--config', str(path), '--out', str(tmp_path / 'run')]) == 1


def test_missing_config_exits_1(tmp_path):
    assert main(['run', '--config', str(tmp_path / 'no_existe.yaml'), '--out', str(tmp_path / 'run')]) == 1


def test_output_path_collision_exits_3(tmp_path):
    bloqueo = tmp_path / 'bloqueo'
    bloqueo.write_text('x', encoding='utf-8')
    assert main(['run', '--config', _yaml(tmp_path, QUADRATIC), '--out', str(bloqueo / 'run')]) == 3


def test_numerical_failure_exits_2(tmp_path):
    # pasos locales con eta_local enorme: X crece x99 por paso hasta desbordar
    data = {
        'problem': {'kind': 'quadratic', 'shape': [8, 6]},
        'n_workers': 2,
        'steps': 200,
        'policy': {'kind': 'scheduled', 'interval': 1000},
        'dion': {'eta_local': 100.0, 'weight_decay': 0.0},
    }
    assert main(['run', '--config', _yaml(tmp_path, data), '--out', str(tmp_path / 'run')]) == 2


# ==============================================================================
# COMPARE
# ==============================================================================

def test_compare_matched_budget(tmp_path):
    out = tmp_path / 'cmp'
    assert main(['compare', '--config', _yaml(tmp_path, SWITCH), '--out', str(out)]) == 0
    comparison = json.loads((out / ARCHIVOS_SALIDA['comparison']).read_text())
    assert comparison['switch_steps'] == [40]
    fila = comparison['seeds'][0]
    adaptive = fila['adaptive']
    posteriores = [s for s in adaptive['sync_steps'] if s > 1]
    expected = matched_interval(adaptive['sync_rate'], 60) if posteriores else 60
    assert fila['interval'] == expected
    scheduled = json.loads((out / 'scheduled' / ARCHIVOS_SALIDA['summary']).read_text())
    assert scheduled['policy'] == {'kind': 'scheduled', 'interval': expected}
    assert (out / 'adaptive' / ARCHIVOS_SALIDA['steps']).exists()
    assert 41 in adaptive['sync_steps']
    assert fila['placement_fraction'] is not None


def test_compare_without_late_syncs_uses_full_interval(tmp_path, caplog):
    data = {**SWITCH, 'policy': {'kind': 'adaptive', 'tau': 1000.0}}
    out = tmp_path / 'cmp'
    assert main(['compare', '--config', _yaml(tmp_path, data), '--out', str(out)]) == 0
    fila = json.loads((out / ARCHIVOS_SALIDA['comparison']).read_text())['seeds'][0]
    assert fila['adaptive']['sync_steps'] == [1]
    assert fila['interval'] == 60
    assert fila['scheduled']['sync_steps'] == [60]
    assert "sin syncs adaptativos" in caplog.text


def test_compare_several_seeds(tmp_path):
    data = {**SWITCH, 'steps': 45, 'compare': {'seeds': [0, 1]}}
    out = tmp_path / 'cmp'
    assert main(['compare', '--config', _yaml(tmp_path, data), '--out', str(out)]) == 0
    comparison = json.loads((out / ARCHIVOS_SALIDA['comparison']).read_text())
    assert [f['seed'] for f in comparison['seeds']] == [0, 1]
    assert (out / 'seed_1' / 'adaptive' / ARCHIVOS_SALIDA['summary']).exists()
    assert isinstance(comparison['adaptive_loss_le_scheduled'], bool)


def test_compare_switch_config_places_syncs_and_beats_schedule(tmp_path):
    out = tmp_path / 'cmp'
    assert main(['compare', '--config', str(CONFIGS / 'compare_switch.yaml'), '--out', str(out)]) == 0
    comparison = json.loads((out / ARCHIVOS_SALIDA['comparison']).read_text())
    assert [f['seed'] for f in comparison['seeds']] == [0, 1, 2, 3, 4]
    for fila in comparison['seeds']:
        assert len([s for s in fila['adaptive']['sync_steps'] if s > 1]) >= 2
        assert fila['placement_fraction'] >= 0.8
    medianas = comparison['median']
    assert medianas['placement_fraction'] >= 0.8
    assert medianas['adaptive_final_loss'] <= medianas['scheduled_final_loss']
    assert medianas['adaptive_mean_divergence'] <= medianas['scheduled_mean_divergence']
    assert comparison['adaptive_loss_le_scheduled'] is True
    assert comparison['adaptive_divergence_le_scheduled'] is True


def test_compare_requires_adaptive_policy(tmp_path):
    data = {**SWITCH, 'policy': {'kind': 'every_step'}}
    assert main(['compare', '--config', _yaml(tmp_path, data), '--out', str(tmp_path / 'cmp')]) == 1


# ==============================================================================
# THEOREM
# ==============================================================================

def test_theorem_defaults_pass(tmp_path):
    out = tmp_path / 'th'
    assert main(['theorem', '--out', str(out)]) == 0
    study = json.loads((out / ARCHIVOS_SALIDA['theorem_json']).read_text())
    assert study['passed'] is True
    assert set(study['problems']) == {'isotropic', 'diag_1e-5_1e-3', 'diag_1_100'}
    assert study['problems']['isotropic']['note']
    frame = pd.read_csv(out / ARCHIVOS_SALIDA['theorem_csv'])
    assert set(frame['phase']) == {'burn_in', 'measured'}
    assert len(frame) == 3 * 3 * 150


def test_theorem_unscaled_diagonal_is_recorded_as_known_deviation(tmp_path):
    out = tmp_path / 'th'
    assert main(['theorem', '--out', str(out)]) == 0
    study = json.loads((out / ARCHIVOS_SALIDA['theorem_json']).read_text())
    sin_escala = study['problems']['diag_1_100']
    assert sin_escala['gate'] is False
    assert sin_escala['passed'] is False
    ratios = [row['ratio'] for row in sin_escala['rows'][:-1]]
    assert all(r is not None and 2.0 < r < 3.0 for r in ratios)
    assert study['known_deviations'] == ['diag_1_100']
    assert study['problems']['diag_1e-5_1e-3']['gate'] is True
    assert study['problems']['diag_1e-5_1e-3']['passed'] is True


def test_theorem_gated_failure_exits_1(tmp_path):
    data = {'theorem': {'problems': [{'name': 'diag_1_100', 'kind': 'diagonal', 'diag': [1.0, 100.0]}]}}
    out = tmp_path / 'th'
    assert main(['theorem', '--config', _yaml(tmp_path, data), '--out', str(out)]) == 1
    assert json.loads((out / ARCHIVOS_SALIDA['theorem_json']).read_text())['passed'] is False


def test_theorem_single_eta_exits_1(tmp_path):
    data = {'theorem': {'etas': [0.02]}}
    assert main(['theorem', '--config', _yaml(tmp_path, data), '--out', str(tmp_path / 'th')]) == 1


def test_theorem_linear_case_is_not_applicable(tmp_path):
    data = {'theorem': {'problems': [{'name': 'linear', 'kind': 'linear', 'dim': 4}]}}
    out = tmp_path / 'th'
    assert main(['theorem', '--config', _yaml(tmp_path, data), '--out', str(out)]) == 0
    resumen = json.loads((out / ARCHIVOS_SALIDA['theorem_json']).read_text())['problems']['linear']
    assert resumen['applicable'] is False
    assert all(row['ratio'] is None for row in resumen['rows'])


# ==============================================================================
# PROJECT Y SWEEP
# ==============================================================================

def test_project_defaults(tmp_path, capsys):
    out = tmp_path / 'proj'
    assert main(['project', '--out', str(out)]) == 0
    df = pd.read_csv(out / ARCHIVOS_SALIDA['projection_csv'])
    assert df['speedup'].round(3).tolist() == [1.020, 1.202, 4.361]
    assert df['adaptive_ms'].tolist() == pytest.approx([3415.2, 3421.5, 3534.5])
    assert 'wan' in capsys.readouterr().out


def test_project_rejects_negative_compute(tmp_path):
    assert main(['project', '--out', str(tmp_path / 'proj'), '--t-compute=-1']) == 1


def test_project_reads_measured_rate(tmp_path):
    summary = tmp_path / 'summary.json'
    summary.write_text(json.dumps({'sync_rate': 0.0}), encoding='utf-8')
    out = tmp_path / 'proj'
    assert main(['project', '--out', str(out), '--summary', str(summary)]) == 0
    datos = json.loads((out / ARCHIVOS_SALIDA['projection_json']).read_text())
    assert datos['sync_rate'] == 0.0
    assert [r['adaptive_ms'] for r in datos['rows']] == pytest.approx([3414.5] * 3)

    summary.write_text(json.dumps({'steps': 10}), encoding='utf-8')
    assert main(['project', '--out', str(out), '--summary', str(summary)]) == 1


def test_sweep_rows(tmp_path):
    data = {**QUADRATIC, 'steps': 20}
    out = tmp_path / 'sweep'
    assert main(['sweep', '--config', _yaml(tmp_path, data), '--out', str(out)]) == 0
    df = pd.read_csv(out / ARCHIVOS_SALIDA['sweep_csv'])
    assert list(df.columns) == SWEEP_COLUMNS
    assert len(df) == 7
    assert df['policy'].iloc[0] == 'every_step'
    assert df['sync_count'].iloc[0] == 20
