"""Regenerate the bundled sample datasets under data/.

Both files are seeded synthetics matching the documented CSV schema:
  - ozone_like.csv: 24 irregular sites, single two-peak seasonal shape with
    spatially correlated magnitude and injected phase variation.
  - weather_like.csv (+ weather_like_covariates.csv): 35 irregular sites,
    smooth multi-bump profiles riding on a latitude trend, with latitude and
    longitude covariates for detrending demos.
"""

from pathlib import Path

import numpy as np

from spafda.dataio import SpatialDataset, save_covariates, save_dataset
from spafda.fdcore import SampledFunction
from spafda.simgen import gen_kriging_dataset

OUT = Path(__file__).resolve().parent.parent / "data"


def make_ozone_like() -> None:
    sim = gen_kriging_dataset(
        design="bimodal",
        B=1.0,
        noise_sd=0.5,
        layout=("uniform_random", 24),
        seed=20260823,
    )
    save_dataset(sim.dataset, OUT / "ozone_like.csv")


def make_weather_like() -> None:
    sim = gen_kriging_dataset(
        design="bspline",
        B=0.8,
        noise_sd=0.4,
        layout=("uniform_random", 35),
        seed=424242,
    )
    ds = sim.dataset
    x = ds.sites[:, 0]
    y = ds.sites[:, 1]
    lat = 45.0 + 2.5 * y
    lon = -75.0 + 5.0 * x
    # latitude trend on the level of the curves, removable by detrending
    trend = 0.6 * (lat - lat.mean())
    fns = tuple(
        SampledFunction(ds.grid, f.values + trend[i], site=f.site)
        for i, f in enumerate(ds.functions)
    )
    out = SpatialDataset(
        ds.grid,
        fns,
        ds.site_ids,
        covariates={"latitude": tuple(lat), "longitude": tuple(lon)},
    )
    save_dataset(out, OUT / "weather_like.csv")
    save_covariates(out, OUT / "weather_like_covariates.csv")


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    make_ozone_like()
    make_weather_like()
    print(f"wrote bundled datasets to {OUT}")
