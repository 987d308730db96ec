"""Litmus-test checker for RDMA memory models with remote read-modify-writes."""

__version__ = "0.1.0"
