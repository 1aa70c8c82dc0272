"""noibench: a network-on-interposer workbench for MoE-style workloads.

Generates bursty multicast traffic traces, simulates chiplet interconnect
topologies at packet level, quantifies cross-expert interference, and searches
the topology design space with a masked-PPO learner.
"""

__version__ = "0.1.0"
