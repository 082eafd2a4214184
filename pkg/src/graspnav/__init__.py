"""Grasp and body-pose planning over point clouds.

Subsystems:
    geometry   poses, pinhole projection, RANSAC planes, sampling, visibility
    scene      point-cloud scenes with embedded instance masks
    grasp      grasp candidate ingestion, de-rotation, filtering
    nav        body-position sampling and validation around a target
    optimizer  joint grasp / body-pose selection
    drawer     handle-drawer matching, axis estimation, view fusion, pull plans
    sim        deterministic synthetic scenes, depth rendering, episode runner
    cli        command-line front end
"""

__version__ = "0.1.0"
