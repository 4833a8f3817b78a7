import pytest

from qgrt.errors import AmbiguousName, UnresolvedImport
from qgrt.frontend import parse_source, resolve_imports


def test_wildcard_import_resolves_operations(kernels):
    unit = parse_source((kernels / "kernel.qu").read_text(), "kernel.qu")
    linked = resolve_imports([unit], [kernels])
    assert "H" in unit.visible and "measure" in unit.visible
    assert unit.visible["H"][0] == "operations"
    assert "config.json" in linked.config_packages


def test_no_imports_is_identity():
    unit = parse_source("operation f(): unit {}")
    linked = resolve_imports([unit], [])
    assert linked.units == [unit]
    assert unit.visible["f"][1] is unit.decls[0]


def test_missing_package_reports_unresolved():
    unit = parse_source("import nope.*;\noperation f(): unit {}")
    with pytest.raises(UnresolvedImport):
        resolve_imports([unit], [])


def test_single_declaration_import(tmp_path):
    (tmp_path / "lib.qu").write_text("package lib;\noperation g(): unit {}\n")
    unit = parse_source("import lib.g;\noperation f(): unit {}")
    resolve_imports([unit], [tmp_path])
    assert unit.visible["g"][0] == "lib"


def test_ambiguous_name_across_imports(tmp_path):
    (tmp_path / "a.qu").write_text("package a;\noperation g(): unit {}\n")
    (tmp_path / "b.qu").write_text("package b;\noperation g(): unit {}\n")
    unit = parse_source("import a.*;\nimport b.*;\noperation f(): unit {}")
    with pytest.raises(AmbiguousName):
        resolve_imports([unit], [tmp_path])


def test_duplicate_declaration_in_package(tmp_path):
    (tmp_path / "a1.qu").write_text("package a;\noperation g(): unit {}\n")
    (tmp_path / "a2.qu").write_text("package a;\noperation g(): unit {}\n")
    unit = parse_source("import a.*;\noperation f(): unit {}")
    with pytest.raises(AmbiguousName):
        resolve_imports([unit], [tmp_path])


def test_transitive_imports_load(tmp_path):
    (tmp_path / "outer.qu").write_text(
        "package outer;\nimport inner.*;\noperation g(): unit { h(); }\n")
    (tmp_path / "inner.qu").write_text("package inner;\noperation h(): unit {}\n")
    unit = parse_source("import outer.*;\noperation f(): unit {}")
    linked = resolve_imports([unit], [tmp_path])
    assert ("inner", "h") in linked.decl_index
