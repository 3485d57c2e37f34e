#!/usr/bin/env python

from setuptools import setup, find_packages
from os import path
import l2r_pipeline


curr_dir = path.abspath(path.dirname(__file__))

with open(path.join(curr_dir, "README.rst")) as f:
    long_desc = f.read()


setup(name='l2r-pipeline',
      version=l2r_pipeline.__version__,
      description='Safe autonomous racing from segmented camera views: vision, latent states, '
                  'k-NN safety policies and per-segment speed adaptation',
      long_description=long_desc,
      long_description_content_type="text/x-rst",
      author=l2r_pipeline.__author__,
      license='GPLv3',
      keywords="racing reinforcement-learning safety segmentation vae knn simulator gymnasium",
      platforms=['any'],
      classifiers=[
          'Intended Audience :: Science/Research',
          'Topic :: Scientific/Engineering :: Artificial Intelligence',
          'License :: OSI Approved :: GNU General Public License v3 (GPLv3)',
          'Programming Language :: Python :: 3',
          'Programming Language :: Python :: 3.10',
          'Programming Language :: Python :: 3.11',
          ],
      packages=find_packages(exclude=['tests', 'tests.*']),
      python_requires='>=3.10',
      install_requires=[
          'argparse-dataclass',
          'numpy',
          'scipy',
          'opencv-python-headless',
          'gymnasium',
          'tqdm',
      ],
      tests_require=[
          'parameterized',
      ],
      test_suite='tests.test_all',
      entry_points={
        'console_scripts': [
            'l2r-pipeline = l2r_pipeline.pipelineapp:main'
            ]
        },
      )
