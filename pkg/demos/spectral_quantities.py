"""Critical speed, tail rates and habitat threshold for a few instances."""

import math

from coopfront import critical_length, critical_speed, principal_eigenvalue, quartic_roots, tail_rate
from coopfront import reference_params

R = reference_params()

# below s* two roots are a complex pair, above it all four are real
for s in (0.0, 1.0, 1.99, 2.0, 2.01, 3.0):
    roots = quartic_roots(R, s)
    print(f"s={s:5.2f}  all real={roots.all_real!s:5}  roots={roots.roots.round(4)}")

print("s* =", critical_speed(R))
print("l* =", critical_length(R), " pi/2 =", math.pi / 2)

for l in (0.5, 1.0, math.pi / 2, 3.0):
    print(f"Lambda0({l:.4f}) = {principal_eigenvalue(R, l):+.6f}")

# approach rate to (u*, v*) slows down as the wave gets faster
for s in (0.0, 0.5, 1.0, 1.5):
    print(f"mu_hat1({s}) = {tail_rate(R, s):.6f}  closed form {(math.sqrt(s*s + 4) - s) / 2:.6f}")

# unequal diffusion breaks the factorization; only numbers are left
skewed = reference_params(d1=2.0, d2=0.5)
print("skewed: s* =", critical_speed(skewed), " l* =", critical_length(skewed))

weak = reference_params(b=1.001, c=1.001)
print("barely cooperative: s* =", critical_speed(weak), " l* =", critical_length(weak))
