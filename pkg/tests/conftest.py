import os

import pytest
from hypothesis import HealthCheck, settings

from tabintent.config import default_settings
from tabintent.table import Field, classify_cell, table_from_columns

settings.register_profile("ci", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


def make_field(values, header="f", index=0):
    return Field(index, header, [classify_cell(v) for v in values])


def make_table(columns, headers=None, id="t"):
    headers = headers or [f"c{i}" for i in range(len(columns))]
    return table_from_columns(id, headers, columns)


@pytest.fixture(scope="session")
def cfg():
    return default_settings()


@pytest.fixture(scope="session")
def vocab(cfg):
    return cfg.vocab


@pytest.fixture(scope="session")
def small_corpus():
    from tabintent.synth import SynthSpec, generate_synthetic

    return generate_synthetic(SynthSpec(80, rows_range=(10, 16), seed=3))


@pytest.fixture(scope="session")
def tiny_config():
    from tabintent.model import ModelConfig

    return ModelConfig(D=8, layers=1, heads=2, e=8, batch_size=16, max_epochs=4, patience=2, seed=5)


@pytest.fixture(scope="session")
def small_examples(small_corpus, tiny_config):
    from tabintent.pipeline import featurize

    return featurize(small_corpus, tiny_config)


# acceptance criteria report: one line per criterion in the terminal summary
ACCEPTANCE: dict = {}


def record_criterion(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
