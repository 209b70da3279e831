"""Heat-trace and zeta-function asymptotics for subordinated Laplacians."""

__version__ = "0.1.0"
