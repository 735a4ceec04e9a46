"""
CurvaDion Dashboard
Home page - Overview del simulador
"""

import streamlit as st

from config import COLORES_POLITICA, DION_DEFAULTS, RMMC_DEFAULTS, RESULTS_DIR, get_runs_disponibles

# Configuración de la página
st.set_page_config(
    page_title="CurvaDion Dashboard",
    page_icon="📡",
    layout="wide",
    initial_sidebar_state="expanded"
)

# Título principal
st.title("📡 CurvaDion Dashboard")
st.markdown("**Sincronización adaptativa por RMMC sobre el optimizador Dion**")
st.markdown("Simulación data-parallel a escala de escritorio")

st.divider()

col1, col2 = st.columns([2, 1])

with col1:
    st.header("Sobre el Proyecto")
    st.markdown("""
    Cada worker mantiene una réplica completa de los parámetros y decide, paso a paso,
    si vale la pena pagar el all-reduce completo de Dion.

    **Metodología**:
    1. Buffer por capa B = M + G y su norma de Frobenius
    2. RMMC = |‖B_t‖ − ‖B_{t−1}‖| / (‖B_{t−1}‖ + ε), máximo sobre capas y workers
    3. RMMC > τ → paso Dion sincronizado (iteración de potencia + error feedback)
    4. En otro caso → paso local con momentum acumulado
    5. Contabilidad de bytes: flag de 4 bytes por paso + sync completo

    **Outputs generados**:
    - Telemetría por paso (`steps.csv`) y resumen (`summary.json`)
    - Comparación con presupuesto igualado (`comparison.json`)
    - Estudio de orden RMMC-curvatura (`theorem_study.csv/json`)
    - Proyección de tiempo de pared (`projection.csv/json`)
    """)

with col2:
    st.header("Regimen por defecto")
    st.markdown(f"""
    | Parámetro | Valor |
    |-----------|-------|
    | η (learning rate) | {DION_DEFAULTS['eta']} |
    | μ (momentum) | {DION_DEFAULTS['mu']} |
    | weight decay | {DION_DEFAULTS['weight_decay']} |
    | rank fraction | {DION_DEFAULTS['rank_fraction']} |
    | τ (umbral RMMC) | {RMMC_DEFAULTS['tau']} |
    | H (Scheduled) | {RMMC_DEFAULTS['interval']} |
    """)

st.divider()

st.header("📋 Cómo usar este dashboard")

tab1, tab2, tab3 = st.tabs(["Estadísticas", "Comparación", "Metodología"])

with tab1:
    st.markdown("""
    **Página: Estadísticas**
    - Selecciona una corrida del sidebar
    - KPIs: pasos, tasa de sincronización, bytes totales, pérdida final, divergencia
    - Tabla de eventos de sincronización con su RMMC
    """)

with tab2:
    st.markdown("""
    **Página: Comparación**
    - Adaptativa vs Scheduled con el mismo presupuesto de comunicación
    - Fracción de syncs cerca de los cambios de curvatura
    - Proyección interactiva de tiempo de pared por red
    """)

with tab3:
    st.markdown("""
    **Página: Metodología**
    - Definición de RMMC y del disparador
    - Paso Dion sincronizado y paso local
    - Relación RMMC-curvatura y estudio de orden
    """)

st.divider()

st.info("""
**ℹ️ Sobre los datos**

Este dashboard consume outputs pre-generados por el simulador offline.
Las simulaciones se ejecutan mediante el script principal, con semillas fijas
y archivos idénticos byte a byte entre corridas iguales.

Para generar nuevas corridas:
```bash
python3 simulador_curvadion.py run --config configs/quadratic.yaml
python3 simulador_curvadion.py compare --config configs/compare_switch.yaml
```
""")

# Sidebar
st.sidebar.header("Configuración")

runs = get_runs_disponibles()

if runs:
    st.sidebar.success(f"✓ {len(runs)} corrida(s) disponible(s)")
    for run in runs:
        st.sidebar.markdown(f"  • {run}")
else:
    st.sidebar.warning(f"⚠️ No hay corridas en {RESULTS_DIR.name}/")

st.sidebar.divider()
st.sidebar.markdown("### Sistema")
st.sidebar.caption("v0.1.0 - CurvaDion Simulator")

st.sidebar.divider()
st.sidebar.markdown("### Politicas")

for kind, color in COLORES_POLITICA.items():
    st.sidebar.markdown(
        f'<span style="background-color:{color}; padding: 2px 10px; '
        f'color: white; border-radius: 3px; '
        f'display: inline-block; width: 100px; text-align: center;">'
        f'{kind}</span>',
        unsafe_allow_html=True
    )
