#!/usr/bin/env python3
"""
SIMULADOR CURVADION - SINCRONIZACION ADAPTATIVA POR RMMC
========================================================

Motor offline del dashboard. Genera en resultados/ los archivos que
consumen las paginas de Streamlit:

    python simulador_curvadion.py run --config configs/quadratic.yaml
    python simulador_curvadion.py compare --config configs/compare_switch.yaml
    python simulador_curvadion.py theorem --config configs/theorem.yaml
    python simulador_curvadion.py project
    python simulador_curvadion.py sweep --config configs/quadratic.yaml
"""

from curvadion.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
