import pytest

from schemas.catalog import BatteryEntry, Catalog
from services.catalog_service import load_catalog, parse_catalog
from tests.conftest import DATA, TOY, TOY_FILES
from utils.errors import CatalogError

BATTERIES = """\
# kind: battery
# synthetic: true
name,capacity,specific_energy,specific_cost,cycle_life
LiPo,50,150,2.5,600
NiMH,50,75,2.4,800
"""


def test_parse_battery_catalog():
    catalog = parse_catalog(BATTERIES, "batteries.csv")
    assert catalog.kind == "battery"
    assert catalog.synthetic
    assert catalog.names() == ["LiPo", "NiMH"]
    assert isinstance(catalog.entries[0], BatteryEntry)
    assert catalog.entries[1].cycle_life == 800


def test_shipped_battery_catalog_has_eight_chemistries():
    catalog = load_catalog(DATA / "catalogs" / "batteries.csv")
    assert len(catalog.entries) == 8
    assert set(catalog.names()) == {"LCO", "LFP", "LiPo", "LMO", "NiCad", "NiH2", "NiMH", "SLA"}
    assert catalog.synthetic
    assert catalog.source


@pytest.mark.parametrize("kind", sorted(TOY_FILES))
def test_every_shipped_catalog_loads(kind):
    full = load_catalog(DATA / "catalogs" / TOY_FILES[kind])
    toy = load_catalog(TOY / TOY_FILES[kind])
    assert full.kind == toy.kind == kind
    assert 1 <= len(toy.entries) <= 4
    assert set(toy.names()) <= set(full.names())


def test_algorithms_are_split_by_role():
    catalog = load_catalog(TOY / "algorithms.csv")
    assert [e.name for e in catalog.by_role("detection")] == ["Edge detector", "Tiny CNN detector"]
    assert len(catalog.by_role("control")) == 2


def test_duplicate_name_points_at_second_row():
    text = BATTERIES + "LiPo,100,150,2.5,600\n"
    with pytest.raises(CatalogError) as exc:
        parse_catalog(text, "batteries.csv")
    assert exc.value.line == 6
    assert exc.value.field == "name"
    assert "line 4" in str(exc.value)


def test_missing_column():
    text = BATTERIES.replace(",cycle_life", "").replace(",600", "").replace(",800", "")
    with pytest.raises(CatalogError) as exc:
        parse_catalog(text, "batteries.csv")
    assert exc.value.field == "cycle_life"
    assert exc.value.line == 3


def test_unknown_column():
    text = BATTERIES.replace("cycle_life", "cycle_life,colour").replace("600", "600,red").replace("800", "800,blue")
    with pytest.raises(CatalogError) as exc:
        parse_catalog(text)
    assert exc.value.field == "colour"


def test_unknown_kind():
    with pytest.raises(CatalogError) as exc:
        parse_catalog(BATTERIES.replace("kind: battery", "kind: propeller"))
    assert exc.value.field == "kind"


def test_missing_kind_header():
    with pytest.raises(CatalogError):
        parse_catalog(BATTERIES.replace("# kind: battery\n", ""))


def test_bad_value_names_line_and_field():
    with pytest.raises(CatalogError) as exc:
        parse_catalog(BATTERIES.replace("NiMH,50,75", "NiMH,50,-75"), "batteries.csv")
    assert exc.value.line == 5
    assert exc.value.field == "specific_energy"
    assert str(exc.value).startswith("batteries.csv:5 [specific_energy]: ")


def test_non_numeric_value():
    with pytest.raises(CatalogError) as exc:
        parse_catalog(BATTERIES.replace("600", "many"))
    assert exc.value.field == "cycle_life"


def test_cell_count_mismatch():
    with pytest.raises(CatalogError) as exc:
        parse_catalog(BATTERIES + "LFP,50,110\n", "batteries.csv")
    assert exc.value.line == 6


def test_empty_catalog():
    header_only = "\n".join(BATTERIES.splitlines()[:3]) + "\n"
    with pytest.raises(CatalogError):
        parse_catalog(header_only)


def test_unreadable_file(tmp_path):
    with pytest.raises(CatalogError) as exc:
        load_catalog(tmp_path / "missing.csv")
    assert exc.value.path.endswith("missing.csv")


def test_catalog_model_rejects_duplicates():
    entry = BatteryEntry(name="LiPo", capacity=50, specific_energy=150, specific_cost=2.5, cycle_life=600)
    with pytest.raises(ValueError):
        Catalog(kind="battery", entries=[entry, entry])


def test_padded_cells_are_trimmed():
    catalog = parse_catalog(BATTERIES.replace("NiMH,50,75", "NiMH , 50,  75"), "batteries.csv")
    assert catalog.names() == ["LiPo", "NiMH"]
    assert catalog.entries[1].specific_energy == 75


def test_comment_between_rows_keeps_line_numbers():
    text = BATTERIES.replace("NiMH,50,75", "# stand-in values\nNiMH,50,-75")
    with pytest.raises(CatalogError) as exc:
        parse_catalog(text, "batteries.csv")
    assert exc.value.line == 6
    assert exc.value.field == "specific_energy"


def test_too_many_cells():
    with pytest.raises(CatalogError) as exc:
        parse_catalog(BATTERIES + "LFP,50,110,3.1,2000,extra\n", "batteries.csv")
    assert exc.value.path == "batteries.csv"
