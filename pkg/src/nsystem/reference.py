"""Published reference values for the symmetric system (lambda=100, n1=n2=100, unit rates)."""

# Table 1, exact stationary moments: alpha -> (E[I1], Var[I1], E[I2], Var[I2])
TABLE1 = {
    0.8: (49.8383, 37.7049, 50.1617, 37.3814),
    0.7: (49.6482, 38.078, 50.3518, 37.3743),
    0.6: (49.1787, 39.2148, 50.8213, 37.5722),
    0.55: (48.6055, 40.8706, 51.3945, 38.0816),
    0.5: (47.333, 44.883, 52.667, 39.549),
    0.4: (39.981, 59.821, 60.019, 39.7854),
}
TABLE1_COLUMNS = ("mean_i1", "var_i1", "mean_i2", "var_i2")
TABLE1_TOL = 5e-3

# Table 2, improved approximation of E[I1]: alpha -> value
TABLE2 = {0.8: 49.83, 0.7: 49.62, 0.6: 49.07, 0.55: 48.29, 0.5: 46.46}
TABLE2_TOL = 1e-2

# fixed point quoted for alpha = 0.6
THETA_STAR_06 = 0.5093
THETA_STAR_TOL = 5e-4

# diffusion variance n * sigma1^2 of the symmetric system
CLT_VAR_I1 = 37.5
