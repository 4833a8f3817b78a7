"""Import resolution: builds one namespace per compilation from source units
and the packages discoverable on the search paths (config packages included).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..errors import AmbiguousName, UnresolvedImport
from . import ast
from .parser import parse_source


@dataclass
class LinkedProgram:
    units: list[ast.SourceUnit]
    packages: dict[str, list[ast.SourceUnit]]
    decl_index: dict[tuple[str, str], object]
    config_packages: dict[str, Path] = field(default_factory=dict)


def _package_header(text: str) -> str | None:
    stripped = text.lstrip()
    if not stripped.startswith("package"):
        return None
    header = stripped[len("package"):].split(";", 1)[0].strip()
    return header or None


def scan_packages(search_paths: list[str | Path]):
    """Index .qu units and .qfg config packages by declared package name."""
    qu_index: dict[str, list[ast.SourceUnit]] = {}
    qfg_index: dict[str, Path] = {}
    files: list[Path] = []
    for p in search_paths:
        p = Path(p)
        if p.is_dir():
            files.extend(sorted(p.glob("*.qu")))
            files.extend(sorted(p.glob("*.qfg")))
        elif p.is_file():
            files.append(p)
    seen: set[Path] = set()
    for f in files:
        f = f.resolve()
        if f in seen:
            continue
        seen.add(f)
        if f.suffix == ".qfg":
            name = _package_header(f.read_text())
            if name:
                qfg_index.setdefault(name, f)
        else:
            unit = parse_source(f.read_text(), str(f))
            qu_index.setdefault(unit.package, []).append(unit)
    return qu_index, qfg_index


def resolve_imports(units: list[ast.SourceUnit],
                    search_paths: list[str | Path] | None = None) -> LinkedProgram:
    qu_index, qfg_index = scan_packages(search_paths or [])
    packages: dict[str, list[ast.SourceUnit]] = {}
    for u in units:
        packages.setdefault(u.package, []).append(u)

    loaded: list[ast.SourceUnit] = list(units)
    worklist = list(units)
    config_packages: dict[str, Path] = {}

    def load_package(name: str, where) -> bool:
        """Pull a package into the link set; True if it exports declarations."""
        if name in packages:
            return True
        if name in qu_index:
            packages[name] = list(qu_index[name])
            loaded.extend(qu_index[name])
            worklist.extend(qu_index[name])
            return True
        if name in qfg_index:
            config_packages[name] = qfg_index[name]
            return False
        raise UnresolvedImport(f"package {name!r} not found on the search path", where)

    # transitively load every imported package
    while worklist:
        unit = worklist.pop()
        for imp in unit.imports:
            if imp.wildcard:
                load_package(imp.path, imp.span)
            else:
                pkg, _, name = imp.path.rpartition(".")
                if pkg and (pkg in packages or pkg in qu_index or pkg in qfg_index):
                    load_package(pkg, imp.span)
                else:
                    load_package(imp.path, imp.span)

    decl_index: dict[tuple[str, str], object] = {}
    for pkg, pkg_units in packages.items():
        for u in pkg_units:
            for d in u.decls:
                key = (pkg, d.name)
                if key in decl_index:
                    raise AmbiguousName(
                        f"declaration {d.name!r} defined twice in package {pkg!r}", d.span)
                decl_index[key] = d

    # per-unit visibility: own package declarations plus imported names
    for unit in loaded:
        visible: dict[str, tuple[str, object]] = {}

        def add(name: str, pkg: str, decl, where) -> None:
            prev = visible.get(name)
            if prev is not None and prev[1] is not decl:
                raise AmbiguousName(
                    f"{name!r} is provided by both package {prev[0]!r} and package {pkg!r}", where)
            visible[name] = (pkg, decl)

        for d in unit.decls:
            add(d.name, unit.package, d, d.span)
        for other in packages.get(unit.package, []):
            if other is not unit:
                for d in other.decls:
                    add(d.name, unit.package, d, d.span)
        for imp in unit.imports:
            if imp.wildcard:
                if imp.path in config_packages:
                    continue  # config packages export no operations
                for d2_unit in packages.get(imp.path, []):
                    for d in d2_unit.decls:
                        add(d.name, imp.path, d, imp.span)
            else:
                pkg, _, name = imp.path.rpartition(".")
                if (pkg, name) in decl_index:
                    add(name, pkg, decl_index[(pkg, name)], imp.span)
                elif imp.path in packages or imp.path in config_packages:
                    continue  # whole-package import without flattening
                else:
                    raise UnresolvedImport(f"{imp.path!r} names no known declaration", imp.span)
        unit.visible = visible

    return LinkedProgram(loaded, packages, decl_index, config_packages)
