import pytest

from tagdistill.scenario import ClinicalScenario, InContextExample

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def radiology_scenario():
    return ClinicalScenario(
        id="radiology",
        name="Radiology",
        system_message="You label fragments of breast imaging reports.",
        output_instruction=(
            'Reply with a JSON array of {"label", "text"} objects and nothing else.'),
        labels=("BIRADS", "L_BIRADS", "R_BIRADS", "RIGHT", "DUCT_DILATED", "OTHER"),
        in_context=(
            InContextExample(
                text="BIRADS 2 po stronie lewej. Przewody mleczne poszerzone.",
                segments=(("L_BIRADS", 0, 26), ("DUCT_DILATED", 27, 55)),
            ),
            InContextExample(
                text="Zmiana w piersi prawej. BIRADS 4.",
                segments=(("RIGHT", 0, 23), ("BIRADS", 24, 33)),
            ),
            InContextExample(
                text="Bez zmian ogniskowych.",
                segments=(("OTHER", 0, 22),),
            ),
        ),
    )


@pytest.fixture
def two_label_scenario():
    return ClinicalScenario(
        id="toy",
        name="Toy",
        system_message="Toy scenario.",
        output_instruction="JSON array only.",
        labels=("ALPHA", "BETA"),
    )
