from setuptools import setup

classifiers = [
    'Development Status :: 4 - Beta',
    'Intended Audience :: Science/Research',
    'Operating System :: OS Independent',
    'License :: OSI Approved :: MIT License',
    'Programming Language :: Python :: 3',
    'Topic :: Scientific/Engineering :: Physics'
]

setup(
    name='gnog-sph',
    version='0.1.0',
    description='Updated Lagrangian SPH for elastic and plastic solids with hourglass control',
    long_description=open('README.md').read() + '\n\n' + open('CHANGELOG.txt').read(),
    long_description_content_type='text/markdown',
    url='',
    author='Omar Hatem',
    author_email='omarhatem221@gmail.com',
    license='MIT',
    classifiers=classifiers,
    keywords='sph solid mechanics hourglass plasticity',
    python_requires='>=3.9',
    py_modules=['cli', 'diagnostics', 'errors', 'forces', 'integrator', 'kernel', 'material', 'neighbor',
                'particles', 'save_and_load', 'scenes', 'snapshot', 'utils', 'visualization'],
    install_requires=['numpy', 'scipy', 'pandas', 'matplotlib'],
    extras_require={'test': ['pytest']},
    entry_points={'console_scripts': ['gnog-sph=cli:main']}
)
