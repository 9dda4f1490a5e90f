"""Quadruped walking-robot simulation stack.

Layers, bottom up: kinematics (closed-form leg FK/IK), gait (crawl cycle
planning and joint traces), arena (2D world geometry and fields), sensors
(noisy readings), controller (obstacle-avoidance state machine), telemetry
(wire protocol and network service), cli (simulation loop and entry point).
"""

__version__ = "0.1.0"
