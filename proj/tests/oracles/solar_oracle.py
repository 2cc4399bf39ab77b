"""Reference values for the solar geometry tests, computed with pvlib.

Run: python3 solar_oracle.py
"""
import numpy as np
import pandas as pd
import pvlib

site = (52.1, 5.18)


def elevation(lat, lon, when, method="nrel_numpy"):
    t = pd.DatetimeIndex([when], tz="UTC")
    return float(pvlib.solarposition.get_solarposition(t, lat, lon, method=method)["apparent_elevation"].iloc[0])


print("elev De Bilt 2017-06-21 12:00", elevation(*site, "2017-06-21 12:00"))
print("elev De Bilt 2017-06-21 12:00 (michalsky)", elevation(*site, "2017-06-21 12:00", "ephemeris"))
print("elev equator 2017-03-20 12:07", elevation(0.0, 0.0, "2017-03-20 12:07"))

for z in (30.0, 60.0, 85.0):
    am = pvlib.atmosphere.get_relative_airmass(z, model="kastenyoung1989")
    ama = pvlib.atmosphere.get_absolute_airmass(am, 101325.0)
    cs = pvlib.clearsky.ineichen(np.array([z]), np.array([ama]), 3.0, altitude=0, dni_extra=1367.0)
    print(f"ineichen zenith {z}: {float(cs['ghi'][0]):.3f}")

for day in ("2017-01-15", "2017-06-15"):
    t = pd.date_range(day, periods=24, freq="h", tz="UTC") + pd.Timedelta(minutes=30)
    e = pvlib.solarposition.get_solarposition(t, *site)["apparent_elevation"]
    print(day, "slots >= 3 deg:", int((e >= 3.0).sum()))
