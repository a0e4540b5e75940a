#include <cmath>

#include "dtdss/convection.hpp"
#include "support.hpp"

using namespace dtdss;

TEST(ConvectiveCoefficient, IdentityAtReference) {
    ConvectionModel m{15.0, 1.225, 2.0, 0.5};
    EXPECT_DOUBLE_EQ(convective_coefficient(m, 1.225, 2.0), 15.0);
    EXPECT_DOUBLE_EQ(convective_coefficient(m, 1.225), 15.0);
}

TEST(ConvectiveCoefficient, SquareRootLaw) {
    ConvectionModel m{15.0, 1.225, 1.0, 0.5};
    EXPECT_NEAR(convective_coefficient(m, 1.225 / 2, 1.0), 15.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(convective_coefficient(m, 0.72, 1.0) / 15.0, 0.767, 5e-4);
}

TEST(ConvectiveCoefficient, HomogeneousInDensityAndWind) {
    ConvectionModel m{20.0, 1.2, 1.0, 0.5};
    for (double rho : {0.6, 0.9, 1.2})
        for (double v : {0.7, 1.0, 3.0}) {
            const double base = convective_coefficient(m, rho, v);
            EXPECT_NEAR(convective_coefficient(m, 4 * rho, v), 2 * base, 1e-12);
            EXPECT_NEAR(convective_coefficient(m, rho, 4 * v), 2 * base, 1e-12);
        }
}

TEST(ConvectiveCoefficient, WindFloor) {
    ConvectionModel m{20.0, 1.2, 1.0, 0.5};
    EXPECT_DOUBLE_EQ(convective_coefficient(m, 1.2, 0.0), convective_coefficient(m, 1.2, 0.5));
    EXPECT_DOUBLE_EQ(convective_coefficient(m, 1.2, 0.2), convective_coefficient(m, 1.2, 0.5));
    EXPECT_GT(convective_coefficient(m, 1.2, 0.6), convective_coefficient(m, 1.2, 0.5));
}

TEST(ConvectiveCoefficient, RejectsBadInput) {
    ConvectionModel m;
    EXPECT_DTDSS_ERROR(convective_coefficient(m, 0.0), ErrorCode::InvalidInput);
    EXPECT_DTDSS_ERROR(convective_coefficient(m, -1.0), ErrorCode::InvalidInput);
    EXPECT_DTDSS_ERROR(convective_coefficient(m, 1.2, -0.1), ErrorCode::InvalidInput);
    EXPECT_DTDSS_ERROR(convective_coefficient(m, 1e300, 1e300), ErrorCode::InvalidInput);  // drive overflows
    ConvectionModel bad{10.0, 1.2, 0.4, 0.5};
    EXPECT_DTDSS_ERROR(bad.validate(), ErrorCode::InvalidInput);
    ConvectionModel zero{0.0, 1.2, 1.0, 0.5};
    EXPECT_DTDSS_ERROR(zero.validate(), ErrorCode::InvalidInput);
}

TEST(ConvectiveFlux, SignPreserving) {
    EXPECT_EQ(convective_flux(15, 300, 300), 0.0);
    EXPECT_NEAR(convective_flux(15, 303, 300), 45.0, 1e-12);
    EXPECT_NEAR(convective_flux(10, 298, 300), -20.0, 1e-12);
}
