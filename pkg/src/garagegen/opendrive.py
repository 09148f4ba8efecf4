"""OpenDRIVE (.xodr) subset writer and reader.

Emitted elements: ``header``, ``road`` (``link``, ``planView`` with ``line`` /
``arc`` geometries, ``lanes`` with a single ``laneSection`` holding one
driving lane on each side of the center lane), ``junction`` with
``connection`` / ``laneLink`` entries.  Road ``name`` records the road role
(``segment``, ``connector`` or ``connecting``).
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET

from .roadnet import LANE_WIDTH, Connection, Geometry, Junction, Link, Road, RoadTopology

LENGTH_TOL = 1e-6


class SchemaViolation(ValueError):
    pass


class LinkageError(ValueError):
    pass


def _f(v: float) -> str:
    return repr(float(v))


def _link_elem(parent: ET.Element, tag: str, link: Link) -> None:
    attrs = {"elementType": link.element_type, "elementId": str(link.element_id)}
    if link.contact is not None:
        attrs["contactPoint"] = link.contact
    ET.SubElement(parent, tag, attrs)


def _lanes(parent: ET.Element) -> None:
    lanes = ET.SubElement(parent, "lanes")
    section = ET.SubElement(lanes, "laneSection", {"s": "0.0"})
    for side, lane_id in (("left", "1"), ("center", "0"), ("right", "-1")):
        group = ET.SubElement(section, side)
        lane = ET.SubElement(
            group, "lane", {"id": lane_id, "type": "none" if lane_id == "0" else "driving",
                            "level": "false"}
        )
        if lane_id != "0":
            ET.SubElement(lane, "width", {"sOffset": "0.0", "a": _f(LANE_WIDTH),
                                          "b": "0.0", "c": "0.0", "d": "0.0"})


def emit_opendrive(t: RoadTopology, name: str = "garage") -> str:
    root = ET.Element("OpenDRIVE")
    ET.SubElement(root, "header", {"revMajor": "1", "revMinor": "4", "name": name,
                                   "version": "1.00"})
    for r in sorted(t.roads.values(), key=lambda r: r.id):
        road = ET.SubElement(root, "road", {"name": r.kind, "length": _f(r.length),
                                            "id": str(r.id), "junction": str(r.junction)})
        if r.predecessor or r.successor:
            link = ET.SubElement(road, "link")
            if r.predecessor:
                _link_elem(link, "predecessor", r.predecessor)
            if r.successor:
                _link_elem(link, "successor", r.successor)
        plan = ET.SubElement(road, "planView")
        for g in r.geometry:
            geom = ET.SubElement(plan, "geometry", {"s": _f(g.s), "x": _f(g.x), "y": _f(g.y),
                                                     "hdg": _f(g.hdg), "length": _f(g.length)})
            if g.curvature == 0.0:
                ET.SubElement(geom, "line")
            else:
                ET.SubElement(geom, "arc", {"curvature": _f(g.curvature)})
        _lanes(road)
    for j in sorted(t.junctions.values(), key=lambda j: j.id):
        junction = ET.SubElement(root, "junction", {"id": str(j.id), "name": f"junction{j.id}"})
        for c in j.connections:
            conn = ET.SubElement(junction, "connection", {
                "id": str(c.id), "incomingRoad": str(c.incoming_road),
                "connectingRoad": str(c.connecting_road), "contactPoint": c.contact_point})
            ET.SubElement(conn, "laneLink", {"from": str(c.lane_from), "to": str(c.lane_to)})
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def _req(elem: ET.Element, attr: str) -> str:
    value = elem.get(attr)
    if value is None:
        raise SchemaViolation(f"<{elem.tag}> lacks required attribute {attr!r}")
    return value


def _num(elem: ET.Element, attr: str) -> float:
    try:
        return float(_req(elem, attr))
    except ValueError as exc:
        raise SchemaViolation(f"<{elem.tag}> attribute {attr!r} is not a number") from exc


def _parse_link(elem: ET.Element | None) -> Link | None:
    if elem is None:
        return None
    kind = _req(elem, "elementType")
    if kind not in ("road", "junction"):
        raise SchemaViolation(f"unknown link elementType {kind!r}")
    contact = elem.get("contactPoint")
    if kind == "road" and contact not in ("start", "end"):
        raise SchemaViolation("road links need contactPoint start|end")
    return Link(kind, int(_req(elem, "elementId")), contact)


def parse_opendrive(xml: str) -> RoadTopology:
    try:
        root = ET.fromstring(xml)
    except ET.ParseError as exc:
        raise SchemaViolation(f"not well-formed XML: {exc}") from exc
    if root.tag != "OpenDRIVE" or root.find("header") is None:
        raise SchemaViolation("document must be <OpenDRIVE> with a <header>")
    roads: dict[int, Road] = {}
    for elem in root.findall("road"):
        rid = int(_req(elem, "id"))
        if rid in roads:
            raise SchemaViolation(f"duplicate road id {rid}")
        plan = elem.find("planView")
        if plan is None:
            raise SchemaViolation(f"road {rid} has no planView")
        geometry = []
        for g in plan.findall("geometry"):
            arc = g.find("arc")
            if arc is None and g.find("line") is None:
                raise SchemaViolation(f"road {rid}: geometry must be line or arc")
            curvature = _num(arc, "curvature") if arc is not None else 0.0
            geometry.append(Geometry(_num(g, "s"), _num(g, "x"), _num(g, "y"), _num(g, "hdg"),
                                     _num(g, "length"), curvature))
        s = 0.0
        for g in geometry:
            if abs(g.s - s) > LENGTH_TOL:
                raise SchemaViolation(f"road {rid}: geometry s={g.s} does not follow {s}")
            s += g.length
        if abs(s - _num(elem, "length")) > LENGTH_TOL:
            raise SchemaViolation(f"road {rid}: length attribute disagrees with planView")
        link = elem.find("link")
        pred = _parse_link(link.find("predecessor")) if link is not None else None
        succ = _parse_link(link.find("successor")) if link is not None else None
        roads[rid] = Road(rid, elem.get("name", "segment"), geometry,
                          int(_req(elem, "junction")), pred, succ)

    junctions: dict[int, Junction] = {}
    for elem in root.findall("junction"):
        jid = int(_req(elem, "id"))
        j = Junction(jid)
        for c in elem.findall("connection"):
            lane = c.find("laneLink")
            if lane is None:
                raise SchemaViolation(f"junction {jid}: connection without laneLink")
            j.connections.append(Connection(
                int(_req(c, "id")), int(_req(c, "incomingRoad")), int(_req(c, "connectingRoad")),
                _req(c, "contactPoint"), int(_req(lane, "from")), int(_req(lane, "to"))))
        junctions[jid] = j

    if not roads:
        raise SchemaViolation("document contains no roads")
    _check_links(roads, junctions)
    return RoadTopology(roads, junctions)


def _check_links(roads: dict[int, Road], junctions: dict[int, Junction]) -> None:
    for r in roads.values():
        for link in (r.predecessor, r.successor):
            if link is None:
                continue
            pool = roads if link.element_type == "road" else junctions
            if link.element_id not in pool:
                raise LinkageError(
                    f"road {r.id} links to missing {link.element_type} {link.element_id}"
                )
        if r.junction != -1 and r.junction not in junctions:
            raise LinkageError(f"road {r.id} claims missing junction {r.junction}")
    for j in junctions.values():
        for c in j.connections:
            for rid in (c.incoming_road, c.connecting_road):
                if rid not in roads:
                    raise LinkageError(f"junction {j.id} connection {c.id} names missing road {rid}")
            if roads[c.connecting_road].junction != j.id:
                raise LinkageError(f"road {c.connecting_road} is not inside junction {j.id}")
        if len(j.arms(roads)) < 3:
            raise SchemaViolation(f"junction {j.id} joins fewer than three roads")


def topologies_equal(a: RoadTopology, b: RoadTopology, tol: float = LENGTH_TOL) -> bool:
    """Same roads, links, junction connections and geometry (within ``tol``)."""
    if a.roads.keys() != b.roads.keys() or a.junctions.keys() != b.junctions.keys():
        return False
    for rid, ra in a.roads.items():
        rb = b.roads[rid]
        if (ra.kind, ra.junction, ra.predecessor, ra.successor) != (
            rb.kind, rb.junction, rb.predecessor, rb.successor
        ):
            return False
        if len(ra.geometry) != len(rb.geometry):
            return False
        for ga, gb in zip(ra.geometry, rb.geometry):
            if any(not math.isclose(u, v, abs_tol=tol)
                   for u, v in zip((ga.s, ga.x, ga.y, ga.hdg, ga.length, ga.curvature),
                                   (gb.s, gb.x, gb.y, gb.hdg, gb.length, gb.curvature))):
                return False
    return all(a.junctions[j].connections == b.junctions[j].connections for j in a.junctions)
