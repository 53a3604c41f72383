from .fixtures import WORKLOADS, get_workload
from .oracle import LifeGrid, adder_oracle, life_oracle

__all__ = ["WORKLOADS", "get_workload", "LifeGrid", "adder_oracle",
           "life_oracle"]
