from . import departure_time  # rush-hour profiles
from . import fare_equilibria
from . import stability
from . import first_best
from . import second_best
