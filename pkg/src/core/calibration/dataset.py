from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..camera import Extrinsics
from ..errors import EmptyDataset, InsufficientViews, DegenerateConfiguration
from ...config import RANK_EPSILON

MIN_POINTS_PER_VIEW = 4


@dataclass(frozen=True, eq=False)
class View:
    """Correspondences of one image: planar world points (Z = 0) and observed distorted pixels."""
    world: np.ndarray
    image: np.ndarray
    ids: tuple = ()
    pose_hint: Optional[Extrinsics] = None

    def __post_init__(self):
        world = np.array(self.world, dtype=float).reshape(-1, 2)
        image = np.array(self.image, dtype=float).reshape(-1, 2)
        if len(world) != len(image):
            raise ValueError(f"View has {len(world)} world points but {len(image)} image points")
        world.setflags(write=False)
        image.setflags(write=False)
        object.__setattr__(self, 'world', world)
        object.__setattr__(self, 'image', image)
        object.__setattr__(self, 'ids', tuple(self.ids) if self.ids else tuple(range(len(world))))

    def __len__(self) -> int:
        return len(self.world)

    @property
    def world_points(self) -> np.ndarray:
        """(n, 3) array with Z = 0."""
        return np.column_stack([self.world, np.zeros(len(self.world))])

    def with_image(self, image: np.ndarray) -> View:
        return View(self.world, image, self.ids, self.pose_hint)

    def is_degenerate(self) -> bool:
        """True when the world points are collinear (or coincide)."""
        centered = self.world - self.world.mean(axis=0)
        s = np.linalg.svd(centered, compute_uv=False)
        return len(s) < 2 or s[0] == 0.0 or s[1] / s[0] < RANK_EPSILON


@dataclass(frozen=True, eq=False)
class CalibrationDataset:
    """N views of a planar target together with the image size in pixels."""
    views: tuple[View, ...]
    image_size: tuple[int, int] = (0, 0)

    def __post_init__(self):
        object.__setattr__(self, 'views', tuple(self.views))
        object.__setattr__(self, 'image_size', tuple(int(v) for v in self.image_size))

    @property
    def num_views(self) -> int:
        return len(self.views)

    @property
    def num_points(self) -> int:
        return sum(len(view) for view in self.views)

    def observations(self) -> np.ndarray:
        """All observed pixels stacked view by view, shape (num_points, 2)."""
        if not self.views:
            return np.zeros((0, 2))
        return np.concatenate([view.image for view in self.views])

    def validate(self, fix_skew: bool = False) -> None:
        """Check that the dataset determines the requested intrinsics."""
        if self.num_points == 0:
            raise EmptyDataset("The dataset contains no feature points")
        required = 2 if fix_skew else 3
        if self.num_views < required:
            mode = "with skew fixed to zero" if fix_skew else "with skew estimated"
            raise InsufficientViews(f"{self.num_views} view(s) given; at least {required} are needed {mode}")
        for index, view in enumerate(self.views):
            if len(view) < MIN_POINTS_PER_VIEW:
                raise DegenerateConfiguration(f"View {index} has {len(view)} points; "
                                              f"at least {MIN_POINTS_PER_VIEW} are needed")
            if view.is_degenerate():
                raise DegenerateConfiguration(f"World points of view {index} are collinear")

    def __eq__(self, other) -> bool:
        if not isinstance(other, CalibrationDataset):
            return NotImplemented
        return (self.image_size == other.image_size and self.num_views == other.num_views
                and all(a.ids == b.ids and np.array_equal(a.world, b.world) and np.array_equal(a.image, b.image)
                        and a.pose_hint == b.pose_hint for a, b in zip(self.views, other.views)))

    __hash__ = None
