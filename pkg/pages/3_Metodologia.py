"""
Pagina 3: Metodologia - Explicacion tecnica
Dashboard de CurvaDion
"""

import streamlit as st
import pandas as pd
import sys
from pathlib import Path

# Agregar directorio padre al path para imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from config import ARCHIVOS_SALIDA, DION_DEFAULTS, RESULTS_DIR, RMMC_DEFAULTS, THEOREM_DEFAULTS
from utils.data_loader import load_json
from utils.styles import check_badge

st.set_page_config(page_title="Metodologia", page_icon="📚", layout="wide")

st.title("Metodologia Tecnica")
st.markdown("**Dion con sincronizacion selectiva guiada por RMMC**")

st.divider()

# Seccion 1: RMMC
st.header("1. Cambio relativo maximo del momentum (RMMC)")

col1, col2 = st.columns([2, 1])

with col1:
    st.markdown(f"""
    Cada worker forma por capa el buffer $B = M + G$ y compara su norma con la del
    paso anterior:

    $$
    \\mathrm{{RMMC}}_t = \\max_{{\\ell}} \\frac{{\\big|\\,\\|B^{{\\ell}}_t\\|_F - \\|B^{{\\ell}}_{{t-1}}\\|_F\\big|}}{{\\|B^{{\\ell}}_{{t-1}}\\|_F + \\varepsilon}}
    $$

    El cluster reduce con **maximo** (no media): basta que una capa de un worker
    cambie bruscamente para sincronizar. Con $\\varepsilon = {RMMC_DEFAULTS['epsilon']}$
    el paso 1 siempre sincroniza (norma previa nula).

    **Disparador**: sincronizar si $\\mathrm{{RMMC}}_t > \\tau$ (estricto).
    """)

with col2:
    st.markdown("**Politicas:**")
    st.markdown(f"""
    | Politica | Regla |
    |----------|-------|
    | every_step | siempre |
    | scheduled | paso % H == 0 |
    | adaptive | RMMC > τ |

    τ por defecto: **{RMMC_DEFAULTS['tau']}**
    H por defecto: **{RMMC_DEFAULTS['interval']}**
    """)

st.divider()

# Seccion 2: Dion
st.header("2. Paso sincronizado y paso local")

col1, col2 = st.columns(2)

with col1:
    st.markdown("""
    **Sincronizado** (todas las replicas terminan identicas):

    $$
    P = \\mathrm{orth}\\Big(\\tfrac{1}{N}\\textstyle\\sum_i B_i Q\\Big), \\quad
    R = \\tfrac{1}{N}\\textstyle\\sum_i B_i^\\top P
    $$

    $$
    M \\leftarrow \\bar B - (1-\\mu) P R^\\top, \\quad
    Q \\leftarrow \\mathrm{colnorm}(R)
    $$

    $$
    X \\leftarrow (1 - \\eta\\lambda)\\bar X - \\eta \\sqrt{m/n}\\, P Q^\\top
    $$
    """)

with col2:
    st.markdown("""
    **Local** (sin comunicacion; el momentum acumula sin decaimiento):

    $$
    M \\leftarrow M + G, \\quad X \\leftarrow (1 - \\eta_{loc}\\lambda) X - \\eta_{loc} G
    $$

    La ortonormalizacion usa Gram-Schmidt modificado con reortogonalizacion;
    una columna con $|r_{jj}| < 10^{-10}$ provoca un nuevo $Q$ aleatorio.
    """)

st.markdown(f"""
| Hiperparametro | Valor |
|----------------|-------|
| η | {DION_DEFAULTS['eta']} |
| μ | {DION_DEFAULTS['mu']} |
| λ (weight decay) | {DION_DEFAULTS['weight_decay']} |
| rango | max(1, round(rank_fraction · min(m, n))), rank_fraction = {DION_DEFAULTS['rank_fraction']} |
""")

st.divider()

# Seccion 3: Relacion con la curvatura
st.header("3. Relacion RMMC-curvatura")

st.markdown(f"""
Para descenso con momentum $x_t = x_{{t-1}} - \\eta M_{{t-1}}$,
$M_t = \\mu M_{{t-1}} + \\nabla F(x_t)$ y paso pequeno
($\\eta\\|M\\|L < {THEOREM_DEFAULTS['step_guard']}$):

$$
\\mathrm{{RMMC}}_t = \\big|\\eta\\,\\kappa_M(x_{{t-1}}) + B_t\\big| + O(\\eta^2)
$$

con $\\kappa_M = v^\\top \\nabla^2 F\\, v$ en la direccion $v = M_{{t-1}}/\\|M_{{t-1}}\\|$ y
$B_t = (1-\\mu) - v^\\top \\nabla F(x_{{t-1}}) / \\|M_{{t-1}}\\|$.

**Estudio de orden**: con η ∈ {THEOREM_DEFAULTS['etas']} y burn-in de
{THEOREM_DEFAULTS['burn_in']} pasos, la mediana del residuo debe caer al menos
{THEOREM_DEFAULTS['min_ratio']}x cada vez que η se reduce a la mitad (O(η²) predice 4x).
Si la mediana queda a escala de redondeo la razon se marca N/A.
""")

estudios = sorted(RESULTS_DIR.rglob(ARCHIVOS_SALIDA['theorem_json'])) if RESULTS_DIR.exists() else []

if estudios:
    estudio_path = st.selectbox("Estudio guardado", estudios,
                                format_func=lambda p: p.parent.relative_to(RESULTS_DIR).as_posix())
    estudio = load_json(estudio_path)
    st.markdown(f"Resultado global: {check_badge(estudio['passed'])}", unsafe_allow_html=True)
    for nombre, resumen in estudio['problems'].items():
        st.markdown(f"**{nombre}** {check_badge(resumen['passed'])}", unsafe_allow_html=True)
        if resumen.get('note'):
            st.caption(resumen['note'])
        st.dataframe(pd.DataFrame(resumen['rows']), hide_index=True)
else:
    st.info("Sin estudios guardados: `python3 simulador_curvadion.py theorem --config configs/theorem.yaml`")

st.divider()

# Seccion 4: Limitaciones
st.header("4. Limitaciones")

st.markdown("""
- Las replicas difieren solo en el fragmento de datos; no hay particion tensorial de Dion.
- Los volumenes se cuentan de forma analitica (4 bytes por valor); no hay red real.
- Los tiempos de sincronizacion por red son entradas del modelo, no mediciones.
- Los problemas son sinteticos (cuadraticas, cambio de curvatura, MLP pequeno).
""")
