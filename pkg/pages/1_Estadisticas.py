"""
Pagina 1: Estadisticas - KPIs y eventos de sincronizacion por corrida
Dashboard de CurvaDion
"""

import streamlit as st
import sys
from pathlib import Path

# Agregar directorio padre al path para imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from config import RESULTS_DIR, get_runs_disponibles
from utils.data_loader import load_run, get_estadisticas_run, sync_events
from utils.styles import policy_badge

st.set_page_config(page_title="Estadisticas", page_icon="📊", layout="wide")

st.title("Estadisticas - Analisis por Corrida")

runs = get_runs_disponibles()

if not runs:
    st.error(f"No se encontraron corridas en {RESULTS_DIR.name}/")
    st.info("""
    **Estructura esperada**:
    ```
    resultados/
      run/
        steps.csv
        summary.json
    ```
    """)
    st.stop()

run_seleccionada = st.selectbox(
    "Selecciona una corrida",
    runs,
    help="Directorios con summary.json o comparison.json"
)

st.divider()

run = load_run(RESULTS_DIR / run_seleccionada)
steps_df, summary = run['steps'], run['summary']

if steps_df is None:
    st.error(f"No se encontro steps.csv para {run_seleccionada}")
    st.stop()

stats = get_estadisticas_run(steps_df)

st.header(run_seleccionada)
if summary is not None:
    st.markdown(f"Politica: {policy_badge(summary['policy'])} &nbsp; "
                f"Semilla: **{summary['seed']}** &nbsp; Workers: **{summary['n_workers']}**",
                unsafe_allow_html=True)

col1, col2, col3, col4 = st.columns(4)

with col1:
    st.metric(
        label="Pasos",
        value=stats['total_pasos'],
        help="Filas de steps.csv"
    )

with col2:
    st.metric(
        label="Tasa de sync",
        value=f"{stats['sync_rate'] * 100:.2f}%",
        delta=f"{stats['syncs']} syncs",
        delta_color="off",
        help="Pasos sincronizados / pasos totales"
    )

with col3:
    st.metric(
        label="Bytes totales",
        value=f"{stats['bytes_total'] / 1e9:.3f} GB",
        help="Ultimo bytes_cum (1 GB = 1e9 bytes)"
    )

with col4:
    loss = stats['loss_stats']
    st.metric(
        label="Perdida final",
        value=f"{loss['final']:.4g}",
        delta=f"{loss['final'] - loss['inicial']:.4g}",
        delta_color="inverse",
        help="Perdida media entre workers en el ultimo paso"
    )

st.divider()

if summary is not None:
    st.subheader("Comunicacion")
    col1, col2, col3 = st.columns(3)
    with col1:
        st.metric("Convencion", summary['comm_convention'])
    with col2:
        st.metric("MB por paso", f"{summary['bytes_per_step_mb']:.4f}")
    with col3:
        reduccion = summary.get('comm_reduction')
        st.metric("Reduccion vs EveryStep", f"{reduccion:.1f}x" if reduccion else "N/A")

    st.markdown(f"""
    | Convencion | Bytes totales |
    |------------|---------------|
    | fullgrad | {summary['total_bytes']['fullgrad']:,} |
    | lowrank | {summary['total_bytes']['lowrank']:,} |
    """)

    st.divider()

st.subheader("Divergencia y RMMC")

col1, col2, col3, col4 = st.columns(4)
with col1:
    st.metric("Divergencia media", f"{stats['divergence_stats']['mean']:.4g}")
with col2:
    st.metric("Divergencia max", f"{stats['divergence_stats']['max']:.4g}")
rmmc = stats['rmmc_stats']
with col3:
    st.metric("RMMC mediana", f"{rmmc['median']:.4g}" if rmmc else "N/A",
              help="Excluye el paso 1")
with col4:
    st.metric("RMMC p95", f"{rmmc['p95']:.4g}" if rmmc else "N/A")

st.divider()

st.subheader("Eventos de Sincronizacion")

eventos = sync_events(steps_df)

if len(eventos) > 0:
    st.dataframe(
        eventos,
        hide_index=True,
        column_config={
            'step': st.column_config.NumberColumn('Paso'),
            'global_rmmc': st.column_config.NumberColumn('RMMC global', format="%.4g"),
            'mean_loss': st.column_config.NumberColumn('Perdida media', format="%.6g"),
            'divergence': st.column_config.NumberColumn('Divergencia', format="%.4g"),
            'gap': st.column_config.NumberColumn('Pasos desde el sync anterior'),
        }
    )
else:
    st.info("La corrida no tiene pasos sincronizados")

st.divider()
st.caption(f"Corrida: **{run_seleccionada}** | Directorio: {RESULTS_DIR.name}/")
