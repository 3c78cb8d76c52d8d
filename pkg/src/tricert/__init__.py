"""Certified n-view triangulation through a semidefinite relaxation of the
epipolar QCQP."""
from .certify import (CertifyConfig, Status, TriangulationResult, check_certificate,
                      gradient_slice_check, maximize_certificate, refine, triangulate)
from .geometry import (are_coplanar, camera_center, dlt_triangulate, fundamental_matrix,
                       project, project_all, reprojection_exact)
from .qcqp import LiftedQcqp, build_qcqp
from .sdp import (SdpProblem, SdpSolution, SolverConfig, SolverStatus, slater_points,
                  solve_sdp, triangulation_duals, triangulation_problem)

__version__ = "0.1.0"
