"""
Pagina 2: Comparacion - Adaptativa vs Scheduled y proyeccion de tiempo de pared
Dashboard de CurvaDion
"""

import streamlit as st
import pandas as pd
import sys
from pathlib import Path

# Agregar directorio padre al path para imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from config import PERFILES_RED, RESULTS_DIR, TIMING_DEFAULTS, get_runs_disponibles
from curvadion.netcost import NetworkProfile, TimingModel, project_table
from utils.data_loader import load_comparison
from utils.styles import check_badge

st.set_page_config(page_title="Comparacion", page_icon="⚖️", layout="wide")

st.title("Comparacion con Presupuesto Igualado")

# ==============================================================================
# SIDEBAR: MODELO DE TIEMPO
# ==============================================================================
st.sidebar.title("Modelo de Tiempo")

t_compute = st.sidebar.number_input("Computo por paso (ms)", min_value=0.0,
                                    value=TIMING_DEFAULTS['t_compute_ms'], step=25.0)
t_opt = st.sidebar.number_input("Optimizador por paso (ms)", min_value=0.0,
                                value=TIMING_DEFAULTS['t_opt_ms'], step=1.0)
t_flag = st.sidebar.number_input("All-reduce del flag (ms)", min_value=0.0,
                                 value=TIMING_DEFAULTS['t_flag_ms'], step=0.1)
sync_rate_pct = st.sidebar.slider("Tasa de sync (%)", min_value=0.0, max_value=100.0,
                                  value=TIMING_DEFAULTS['sync_rate'] * 100, step=0.5)

st.sidebar.markdown("---")
st.sidebar.subheader("Perfiles de red (t_sync ms)")

perfiles = []
for nombre, vals in PERFILES_RED.items():
    t_sync = st.sidebar.number_input(nombre, min_value=0.0, value=vals['t_sync_ms'], step=10.0)
    perfiles.append(NetworkProfile(nombre, t_sync, vals['latency_ms'], vals['bandwidth_gbps']))

# ==============================================================================
# COMPARACION GUARDADA
# ==============================================================================
st.header("Corridas comparadas")

comparaciones = [r for r in get_runs_disponibles() if load_comparison(RESULTS_DIR / r) is not None]

if not comparaciones:
    st.warning("No hay comparison.json en resultados/")
    st.info("""
    Generar con:
    ```bash
    python3 simulador_curvadion.py compare --config configs/compare_switch.yaml
    ```
    """)
else:
    seleccion = st.selectbox("Selecciona una comparacion", comparaciones)
    comp = load_comparison(RESULTS_DIR / seleccion)
    med = comp['median']

    col1, col2, col3, col4 = st.columns(4)
    with col1:
        st.metric("Perdida final (adaptativa)", f"{med['adaptive_final_loss']:.4g}")
    with col2:
        st.metric("Perdida final (scheduled)", f"{med['scheduled_final_loss']:.4g}")
    with col3:
        st.metric("Divergencia media (adaptativa)", f"{med['adaptive_mean_divergence']:.4g}")
    with col4:
        st.metric("Divergencia media (scheduled)", f"{med['scheduled_mean_divergence']:.4g}")

    fraccion = med.get('placement_fraction')
    st.markdown(
        f"Perdida adaptativa <= scheduled: {check_badge(comp['adaptive_loss_le_scheduled'])} &nbsp; "
        f"Divergencia adaptativa <= scheduled: {check_badge(comp['adaptive_divergence_le_scheduled'])} &nbsp; "
        f"Syncs cerca de cambios de curvatura (±{comp['window']} pasos): "
        f"**{'N/A' if fraccion is None else f'{fraccion * 100:.0f}%'}**",
        unsafe_allow_html=True
    )

    filas = []
    for fila in comp['seeds']:
        filas.append({
            'seed': fila['seed'],
            'H': fila['interval'],
            'syncs adaptativa': fila['adaptive']['sync_count'],
            'syncs scheduled': fila['scheduled']['sync_count'],
            'perdida adaptativa': fila['adaptive']['final_loss'],
            'perdida scheduled': fila['scheduled']['final_loss'],
            'fraccion cerca de cambios': fila['placement_fraction'],
        })
    st.dataframe(pd.DataFrame(filas), hide_index=True)

    with st.expander("Pasos sincronizados por semilla"):
        if comp['switch_steps']:
            st.markdown(f"**Cambios de curvatura**: {comp['switch_steps']}")
        for fila in comp['seeds']:
            st.markdown(f"**Semilla {fila['seed']}** - adaptativa: {fila['adaptive']['sync_steps']}")

st.divider()

# ==============================================================================
# PROYECCION DE TIEMPO DE PARED
# ==============================================================================
st.header("Proyeccion de tiempo de pared")

try:
    base = TimingModel(t_compute, t_opt, t_flag, 0.0, sync_rate_pct / 100)
    tabla = project_table(perfiles, base=base, steps_total=TIMING_DEFAULTS['steps_total'])
except ValueError as exc:
    st.error(str(exc))
    st.stop()

st.dataframe(
    tabla,
    hide_index=True,
    column_config={
        'network': st.column_config.TextColumn('Red'),
        't_sync_ms': st.column_config.NumberColumn('t_sync (ms)', format="%.1f"),
        'baseline_ms': st.column_config.NumberColumn('Dion (ms/paso)', format="%.1f"),
        'adaptive_ms': st.column_config.NumberColumn('CurvaDion (ms/paso)', format="%.1f"),
        'speedup': st.column_config.NumberColumn('Speedup', format="%.3fx"),
        'baseline_minutes': st.column_config.NumberColumn('Dion (min)', format="%.1f"),
        'adaptive_minutes': st.column_config.NumberColumn('CurvaDion (min)', format="%.1f"),
    }
)

st.caption(f"Minutos totales para {TIMING_DEFAULTS['steps_total']} pasos. "
           "T_dion = computo + optimizador + t_sync; "
           "T_curvadion = computo + optimizador + flag + tasa * t_sync")
