#!/usr/bin/env python3
"""Writes assets/hands/simple_hand_22.json and assets/hands/toy_pincer.json.

The 22-DoF hand mirrors Shadow Hand topology (index/middle/ring 4 joints,
little 5, thumb 5) with capsule fingers and a box palm. Hand frame: wrist at
the origin, fingers along +z, palm facing +y, thumb on the +x side.
"""
import json
import math
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent / "assets" / "hands"


def r6(v):
    return [round(float(x), 6) for x in v]


def capsule_spheres(length, radius, spacing_ratio=1.0):
    n = max(2, math.ceil(length / (radius * spacing_ratio)) + 1)
    return [[0.0, 0.0, length * i / (n - 1)] for i in range(n)]


def pen(points, radius):
    return [{"position": r6(p), "radius": round(radius, 6)} for p in points]


def distal_contacts(length, radius):
    s, c = math.sin(math.radians(40)), math.cos(math.radians(40))
    h = math.sqrt(0.5)
    return [
        {"position": r6([0, radius, 0.3 * length]), "normal": [0, 1, 0]},
        {"position": r6([0, radius, 0.7 * length]), "normal": [0, 1, 0]},
        {"position": r6([radius * s, radius * c, 0.5 * length]), "normal": r6([s, c, 0])},
        {"position": r6([-radius * s, radius * c, 0.5 * length]), "normal": r6([-s, c, 0])},
        {"position": r6([0, radius * h, length + radius * h]), "normal": r6([0, h, h])},
    ]


def capsule_link(name, length, radius, contacts=None, palmar=(0, 1, 0)):
    link = {
        "name": name,
        "primitives": [{"type": "capsule", "a": [0, 0, 0], "b": r6([0, 0, length]), "radius": radius}],
        "palmar_direction": list(palmar),
        "penetration_anchors": pen(capsule_spheres(length, radius), radius),
    }
    if contacts:
        link["contact_anchors"] = contacts
    return link


def sphere_link(name, radius):
    return {
        "name": name,
        "primitives": [{"type": "sphere", "center": [0, 0, 0], "radius": radius}],
        "palmar_direction": [0, 1, 0],
        "penetration_anchors": pen([[0, 0, 0]], radius),
    }


def joint(name, parent, child, xyz, axis, lower, upper, rpy=(0, 0, 0)):
    return {
        "name": name,
        "type": "revolute",
        "parent": parent,
        "child": child,
        "origin": {"xyz": r6(xyz), "rpy": r6(rpy)},
        "axis": r6(axis),
        "lower": lower,
        "upper": upper,
    }


PREGRASP = {"J4": 0.0, "J3": 0.3, "J2": 0.3, "J1": 0.2, "LFJ5": 0.1,
            "THJ5": 0.5, "THJ4": 0.9, "THJ3": 0.0, "THJ2": 0.0, "THJ1": 0.3}


def simple_hand():
    fr = 0.0085  # finger radius
    lengths = {"proximal": 0.045, "middle": 0.025, "distal": 0.022}
    palm_half = [0.043, 0.011, 0.0475]
    palm_pen = []
    for x in [-0.0344 + 0.0138 * i for i in range(6)]:
        for z in [0.011 + 0.0081 * k for k in range(10)]:
            palm_pen.append([x, 0.0, z])
    links = [
        {
            "name": "palm",
            "primitives": [{"type": "box", "center": [0, 0, palm_half[2]], "half_extents": palm_half}],
            "palmar_direction": [0, 1, 0],
            "penetration_anchors": pen(palm_pen, 0.011),
            "contact_anchors": [
                {"position": r6([sx * 0.02, 0.011, z]), "normal": [0, 1, 0]}
                for z in (0.035, 0.07) for sx in (1, -1)
            ],
        }
    ]
    joints = []
    ignore = []

    def finger(prefix, parent, base_xyz, extra_first=None):
        knuckle = f"{prefix}_knuckle"
        links.append(sphere_link(knuckle, fr))
        joints.append(joint(f"{prefix.upper()}J4", parent, knuckle, base_xyz, [0, 1, 0], -0.349, 0.349))
        links.append(capsule_link(f"{prefix}_proximal", lengths["proximal"], fr))
        joints.append(joint(f"{prefix.upper()}J3", knuckle, f"{prefix}_proximal", [0, 0, 0], [-1, 0, 0], -0.262, 1.571))
        links.append(capsule_link(f"{prefix}_middle", lengths["middle"], fr))
        joints.append(joint(f"{prefix.upper()}J2", f"{prefix}_proximal", f"{prefix}_middle", [0, 0, lengths["proximal"]], [-1, 0, 0], 0.0, 1.571))
        links.append(capsule_link(f"{prefix}_distal", lengths["distal"], fr, distal_contacts(lengths["distal"], fr)))
        joints.append(joint(f"{prefix.upper()}J1", f"{prefix}_middle", f"{prefix}_distal", [0, 0, lengths["middle"]], [-1, 0, 0], 0.0, 1.571))
        ignore.append(["palm", f"{prefix}_proximal"])
        if parent != "palm":
            ignore.append([parent, f"{prefix}_proximal"])
            ignore.append(["palm", knuckle])

    finger("ff", "palm", [0.033, 0, 0.095])
    finger("mf", "palm", [0.011, 0, 0.099])
    finger("rf", "palm", [-0.011, 0, 0.095])

    # Little finger metacarpal cups the palm.
    links.append(capsule_link("lf_metacarpal", 0.055, 0.011))
    links[-1]["primitives"][0]["a"] = [0, 0, 0.005]
    links[-1]["primitives"][0]["b"] = [0, 0, 0.06]
    links[-1]["penetration_anchors"] = pen([[0, 0, 0.005 + 0.055 * i / 5] for i in range(6)], 0.011)
    joints.append(joint("LFJ5", "palm", "lf_metacarpal", [-0.033, 0, 0.02], [-0.573576, 0, 0.819152], 0.0, 0.785))
    finger("lf", "lf_metacarpal", [0, 0, 0.067])
    ignore.append(["lf_metacarpal", "rf_knuckle"])

    # Thumb: base frame tilted 45 degrees so the thumb points outward and up.
    tilt = [0, math.pi / 4, 0]
    links.append(sphere_link("th_base", 0.012))
    joints.append(joint("THJ5", "palm", "th_base", [0.034, 0.009, 0.029], [-math.sqrt(0.5), 0, math.sqrt(0.5)], -1.047, 1.047, rpy=tilt))
    links.append(capsule_link("th_proximal", 0.038, 0.011))
    joints.append(joint("THJ4", "th_base", "th_proximal", [0, 0, 0], [-1, 0, 0], 0.0, 1.222))
    links.append(sphere_link("th_hub", 0.0105))
    joints.append(joint("THJ3", "th_proximal", "th_hub", [0, 0, 0.038], [-1, 0, 0], -0.209, 0.209))
    links.append(capsule_link("th_middle", 0.032, 0.01))
    joints.append(joint("THJ2", "th_hub", "th_middle", [0, 0, 0], [0, 1, 0], -0.698, 0.698))
    links.append(capsule_link("th_distal", 0.022, 0.0095, distal_contacts(0.022, 0.0095)))
    joints.append(joint("THJ1", "th_middle", "th_distal", [0, 0, 0.032], [-1, 0, 0], -0.262, 1.571))
    ignore += [["palm", "th_proximal"], ["th_base", "th_hub"], ["th_proximal", "th_middle"], ["palm", "th_hub"]]

    # Open pre-grasp: fingers slightly flexed, thumb swung into opposition.
    for j in joints:
        suffix = j["name"][2:]
        j["pregrasp"] = PREGRASP.get(j["name"], PREGRASP.get(suffix, 0.0))

    return {
        "schema": "bigrasp-hand/1",
        "name": "simple_hand_22",
        "root": "palm",
        "surface_samples": 2000,
        "sample_seed": 20240629,
        "palm": {"link": "palm", "center": [0, 0.011, 0.05], "normal": [0, 1, 0]},
        "links": links,
        "joints": joints,
        "ignore_pairs": ignore,
    }


def toy_pincer():
    links = [
        {
            "name": "base",
            "primitives": [{"type": "box", "center": [0, 0, 0.02], "half_extents": [0.04, 0.01, 0.02]}],
            "palmar_direction": [0, 1, 0],
            "penetration_anchors": pen([[x, 0, 0.02] for x in (-0.025, 0, 0.025)], 0.01),
        }
    ]
    joints = []
    for side, x, axis in (("left", -0.03, [0, 0, -1]), ("right", 0.03, [0, 0, 1])):
        links.append({
            "name": f"{side}_finger",
            "primitives": [{"type": "capsule", "a": [0, 0, 0], "b": [0, 0, 0.05], "radius": 0.008}],
            "palmar_direction": [0, 1, 0],
            "penetration_anchors": pen(capsule_spheres(0.05, 0.008), 0.008),
            "contact_anchors": [
                {"position": [0, 0.008, z], "normal": [0, 1, 0]} for z in (0.02, 0.04)
            ],
        })
        joints.append(joint(f"{side}_joint", "base", f"{side}_finger", [x, 0, 0.04], [-1, 0, 0], -0.5, 1.2))
    return {
        "schema": "bigrasp-hand/1",
        "name": "toy_pincer",
        "root": "base",
        "surface_samples": 200,
        "sample_seed": 7,
        "palm": {"link": "base", "center": [0, 0.01, 0.02], "normal": [0, 1, 0]},
        "links": links,
        "joints": joints,
        "ignore_pairs": [],
    }


def main():
    ROOT.mkdir(parents=True, exist_ok=True)
    for name, doc in (("simple_hand_22.json", simple_hand()), ("toy_pincer.json", toy_pincer())):
        (ROOT / name).write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
