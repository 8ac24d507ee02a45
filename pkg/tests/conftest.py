import numpy as np
import pytest

import noonsim as ns

PUMP_SPDC_NM = 773.5
SIGNAL_NM = 1547.0
PUMP_SFG_NM = 795.0
SFG_NM = 1.0 / (1.0 / PUMP_SFG_NM + 1.0 / SIGNAL_NM)


@pytest.fixture(scope="session")
def dispersion():
    return ns.load_sellmeier()


@pytest.fixture(scope="session")
def spdc_crystal(dispersion):
    crystal = ns.CrystalSpec(
        length_mm=20.0,
        poling_period_um=1.0,
        process="spdc",
        crystal_type="type-II",
        axes={"pump": "ny", "signal": "ny", "idler": "nz"},
        dispersion=dispersion,
    )
    return ns.with_solved_poling(crystal, (PUMP_SPDC_NM, SIGNAL_NM, SIGNAL_NM))


@pytest.fixture(scope="session")
def sfg_crystal(dispersion):
    crystal = ns.CrystalSpec(
        length_mm=20.0,
        poling_period_um=1.0,
        process="sfg",
        crystal_type="type-I",
        axes={"sfg": "nz", "pump": "nz", "signal": "nz"},
        dispersion=dispersion,
    )
    return ns.with_solved_poling(crystal, (SFG_NM, PUMP_SFG_NM, SIGNAL_NM))


@pytest.fixture(scope="session")
def default_grid():
    return np.linspace(SIGNAL_NM - 8.0, SIGNAL_NM + 8.0, 4096)


@pytest.fixture(scope="session")
def emission(spdc_crystal, default_grid):
    return ns.emission_spectrum(spdc_crystal, PUMP_SPDC_NM, default_grid)


@pytest.fixture(scope="session")
def acceptance(sfg_crystal, default_grid):
    return ns.acceptance_spectrum(sfg_crystal, PUMP_SFG_NM, default_grid)


@pytest.fixture(scope="session")
def filtered(emission, acceptance):
    return ns.filtered_spectrum(emission, acceptance)
