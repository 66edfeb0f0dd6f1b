"""HTTP routers for instances, rounding and analysis."""
