#include "carnot_lab.h"

int main(void) {
    const double mu[4] = {1.0, 0.0, 0.0, -4.0};
    const double s0[4] = {0.0, 0.0, 1.0, 0.0};
    CarnotSystem *sys = NULL;
    CarnotGeodesic *geo = NULL;
    double h = 0.0, pt[4];
    if (carnot_system_new("eng", 2, mu, 4, 0.0, 1.0, &sys) != CARNOT_STATUS_OK) return 1;
    if (carnot_system_hamiltonian(sys, s0, 4, &h) != CARNOT_STATUS_OK) return 2;
    if (carnot_geodesic_new(sys, s0, 4, -1.0, 1.0, 1e-10, &geo) != CARNOT_STATUS_OK) return 3;
    if (carnot_geodesic_point(geo, 0.5, pt, 4) != CARNOT_STATUS_OK) return 4;
    carnot_geodesic_free(geo);
    carnot_system_free(sys);
    return h == 0.5 ? 0 : 5;
}
