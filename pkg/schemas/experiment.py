from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.dataset import TRAIN_FRACTION


class ModelSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["least_squares", "logistic_regression", "mlp"] = Field(
        default="least_squares", description="Toy objective to train"
    )
    hidden: int = Field(default=8, ge=1, description="Hidden width of the MLP")


class DatasetSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    samples: int = Field(default=4096, ge=2, description="Total synthetic samples, split 80/20")
    features: int = Field(default=16, ge=1, description="Feature count f")
    noise: float = Field(default=0.1, ge=0.0, description="Label noise standard deviation")
    seed: Optional[int] = Field(default=None, ge=0, description="Dataset seed; the run seed when unset")


class LearningRateSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schedule: Literal["constant", "inverse_time", "step"] = "constant"
    initial: float = Field(default=0.1, gt=0.0)
    decay: float = Field(default=0.0, ge=0.0, description="inverse_time: eta / (1 + decay * t)")
    step_size: int = Field(default=1000, ge=1, description="step: iterations between decays")
    gamma: float = Field(default=0.5, gt=0.0, le=1.0, description="step: multiplicative decay")

    def at(self, t: int) -> float:
        if self.schedule == "inverse_time":
            return self.initial / (1.0 + self.decay * t)
        if self.schedule == "step":
            return self.initial * self.gamma ** (t // self.step_size)
        return self.initial


class DropSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    p_grad: float = Field(default=0.0, ge=0.0, le=1.0)
    p_param: float = Field(default=0.0, ge=0.0, le=1.0)
    p_list: Optional[List[float]] = Field(default=None, description="Sweep values applied to both phases")

    @model_validator(mode="after")
    def check_p_list(self):
        if self.p_list is not None:
            if not self.p_list:
                raise ValueError("p_list must not be empty")
            for p in self.p_list:
                if not 0.0 <= p < 1.0:
                    raise ValueError(f"sweep drop rates must lie in [0, 1), got {p}")
        return self


class AggregationSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    policy: Literal["omit_renormalize", "stale_substitute"] = "omit_renormalize"
    fallback: Literal["reuse_prev", "zero", "skip"] = "reuse_prev"


class ExperimentConfig(BaseModel):
    """Everything that determines a run; (config, seed) fixes every output byte"""
    model_config = ConfigDict(extra="forbid")

    workers: int = Field(default=4, ge=2, description="Number of data-parallel workers N")
    shards: Optional[int] = Field(default=None, ge=1, description="Parameter shards; defaults to N")
    iterations: int = Field(default=200, ge=1)
    micro_batches: int = Field(default=1, ge=1)
    batch_size: int = Field(default=32, ge=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    model: ModelSpec = Field(default_factory=ModelSpec)
    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    learning_rate: LearningRateSpec = Field(default_factory=LearningRateSpec)
    drop: DropSpec = Field(default_factory=DropSpec)
    aggregation: AggregationSpec = Field(default_factory=AggregationSpec)
    execution: Literal["sequential", "parallel"] = "sequential"
    sigma2_window: int = Field(default=100, ge=1)
    instrument: bool = Field(default=False, description="Check the drift case table every iteration")
    output_dir: Optional[str] = Field(default=None, description="Run directory; LOSSYSYNC_OUTPUT_ROOT/<command> when unset")
    jobs: int = Field(default=1, ge=1, description="Parallel sweep processes")

    @model_validator(mode="after")
    def check_sizes(self):
        if self.shards is not None and self.shards < self.workers:
            raise ValueError(f"shards ({self.shards}) must be at least workers ({self.workers})")
        per_step = self.workers * self.micro_batches * self.batch_size
        n = self.dataset.samples
        train = min(n - 1, max(1, int(round(TRAIN_FRACTION * n))))
        if per_step > train:
            raise ValueError(
                f"workers x micro_batches x batch_size = {per_step} exceeds the {train} training samples"
            )
        return self

    @property
    def num_shards(self) -> int:
        return self.shards if self.shards is not None else self.workers

    @property
    def dataset_seed(self) -> int:
        return self.dataset.seed if self.dataset.seed is not None else self.seed
