from pathlib import Path

README = (Path(__file__).resolve().parent.parent / "README.md").read_text()


def test_readme_documents_fsmc_count_discrepancy():
    para = next(p for p in README.split("\n\n") if "119" in p)
    assert "209" in para and "does not match" in para


def test_readme_covers_install_and_cli():
    assert "pip install -e . --no-build-isolation" in README
    for cmd in ("analyze", "compare", "sweep", "reuse", "curves", "break-even"):
        assert f"chiplet-cost {cmd}" in README


def test_readme_flags_chip_last_choice():
    assert "Chip-last" in README and "ambiguous" in README


def test_readme_has_no_em_dashes():
    assert "—" not in README
